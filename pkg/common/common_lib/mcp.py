import asyncio
import functools
import logging
from typing import Callable, Literal, TypeVar

from mcp.server.fastmcp import FastMCP

from common_lib.errors import BiphotonError

logger = logging.getLogger(__name__)

T = TypeVar("T")


class AsyncioFastMCP(FastMCP):
    def run(self, transport: Literal["stdio"] = "stdio") -> None:
        """Run the FastMCP server. Note this is a synchronous function.

        Args:
            transport: Transport protocol to use; only "stdio" is served
        """
        if transport == "stdio":
            asyncio.run(self.run_stdio_async())
        else:
            raise ValueError(f"Invalid transport: {transport}")


def tool_errors(func: Callable[..., T]) -> Callable[..., T]:
    """Surface library failures to MCP clients as ValueError with the original message"""

    @functools.wraps(func)
    def wrapper(*args, **kwargs) -> T:
        try:
            return func(*args, **kwargs)
        except BiphotonError as e:
            logger.warning(f"{func.__name__} failed: {type(e).__name__}: {e}")
            raise ValueError(f"{type(e).__name__}: {e}") from e

    return wrapper

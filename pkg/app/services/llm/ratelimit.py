import asyncio
import time

from collections import deque
from typing import Awaitable, Callable

WINDOW_SECONDS = 60.0


class RateLimiter:
    """
    Sliding-window limiter: at most `rate_per_minute` acquisitions in any 60 second window.

    Safe for concurrent callers within one event loop; waiters are served in arrival
    order. The clock and sleep functions are injectable so tests can run on virtual time.
    """

    def __init__(
        self,
        rate_per_minute: int,
        clock: Callable[[], float] = time.monotonic,
        sleep: Callable[[float], Awaitable[None]] = asyncio.sleep,
    ):
        if rate_per_minute < 1:
            raise ValueError("rate_per_minute must be at least 1")
        self.rate_per_minute = rate_per_minute
        self._clock = clock
        self._sleep = sleep
        self._issued: deque[float] = deque()
        self._lock = asyncio.Lock()

    async def acquire(self) -> None:
        async with self._lock:
            while True:
                now = self._clock()
                while self._issued and self._issued[0] <= now - WINDOW_SECONDS:
                    self._issued.popleft()

                if len(self._issued) < self.rate_per_minute:
                    self._issued.append(now)
                    return

                await self._sleep(self._issued[0] + WINDOW_SECONDS - now)

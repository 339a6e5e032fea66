"""Simulated clock.

Every timestamp in the system is an integer count of simulated
milliseconds since the start of the run. Nothing reads the wall clock;
components that need the current time hold a reference to one SimClock
and the run loop is the only writer.
"""

from .errors import FogchainError


class SimClock:
    """Monotonic simulated time in milliseconds."""

    def __init__(self, start_ms: int = 0):
        self._now = int(start_ms)

    @property
    def now_ms(self) -> int:
        return self._now

    def advance_to(self, t_ms: int) -> None:
        if t_ms < self._now:
            raise FogchainError(
                f"clock cannot move backwards: {t_ms} < {self._now}")
        self._now = int(t_ms)

    def advance(self, delta_ms: int) -> None:
        self.advance_to(self._now + int(delta_ms))


SECOND_MS = 1_000
MINUTE_MS = 60 * SECOND_MS
HOUR_MS = 60 * MINUTE_MS

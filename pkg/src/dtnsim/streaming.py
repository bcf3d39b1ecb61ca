"""Server-side push streams for detected real-time polling.

Once a user polls an object fast enough for long enough, the object is
promoted to a subscription: the server reads each new slice of data
once per period and pushes it to every subscriber's DTN, so the polls
are answered locally and redundant upstream requests disappear.
"""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass
class StreamSubscription:
    object_id: str
    period: float
    last_pushed: int                       # observation-time high-water mark
    started_at: float
    subscribers: dict[str, int] = field(default_factory=dict)  # user -> dtn
    last_activity: dict[str, float] = field(default_factory=dict)

    @property
    def subscriber_dtns(self) -> list[int]:
        return sorted(set(self.subscribers.values()))


class StreamManager:
    """One subscription per object; periods follow the fastest subscriber."""

    def __init__(self, idle_timeout_periods: float = 10.0):
        self.idle_timeout_periods = idle_timeout_periods
        self.subscriptions: dict[str, StreamSubscription] = {}
        self.origin_reads = 0
        self.origin_bytes = 0.0

    def promote(self, user_id: str, object_id: str, dtn: int,
                observed_period: float, now: float,
                available_obs: float) -> StreamSubscription:
        """Create or join the object's subscription."""
        sub = self.subscriptions.get(object_id)
        if sub is None:
            sub = StreamSubscription(
                object_id=object_id,
                period=float(observed_period),
                last_pushed=int(available_obs),
                started_at=now,
            )
            self.subscriptions[object_id] = sub
        else:
            sub.period = min(sub.period, float(observed_period))
        sub.subscribers[user_id] = dtn
        sub.last_activity[user_id] = now
        return sub

    def note_activity(self, user_id: str, object_id: str, now: float) -> None:
        sub = self.subscriptions.get(object_id)
        if sub is not None and user_id in sub.subscribers:
            sub.last_activity[user_id] = now

    def push_tick(self, sub: StreamSubscription, available_obs: float,
                  rate: float = 1.0) -> list[tuple[int, tuple[int, int]]]:
        """Push [last_pushed, available) to every subscriber DTN.

        One origin read per tick regardless of subscriber count; no new
        data means no read and no mark advance.
        """
        new_end = int(available_obs)
        if new_end <= sub.last_pushed or not sub.subscribers:
            return []
        segment = (sub.last_pushed, new_end)
        self.origin_reads += 1
        self.origin_bytes += (new_end - sub.last_pushed) * rate
        sub.last_pushed = new_end
        return [(dtn, segment) for dtn in sub.subscriber_dtns]

    def expire(self, sub: StreamSubscription, now: float,
               period_to_wall: float = 1.0) -> bool:
        """Drop idle subscribers; returns True when the subscription dies.

        `period_to_wall` converts the subscription period into wall
        seconds when the trace timeline is compressed or stretched.
        """
        timeout = self.idle_timeout_periods * sub.period * period_to_wall
        for user in [u for u, ts in sub.last_activity.items()
                     if now - ts > timeout]:
            sub.subscribers.pop(user, None)
            sub.last_activity.pop(user, None)
        if not sub.subscribers:
            self.subscriptions.pop(sub.object_id, None)
            return True
        return False

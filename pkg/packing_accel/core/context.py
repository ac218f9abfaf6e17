import threading
from dataclasses import dataclass, field


@dataclass
class CloneContext:
    """Per-clone isolated state: identity, RNG seed, injected delay and the shared stop signal."""

    clone_id: int
    seed: int
    delay: float = 0.0
    cancel: threading.Event = field(default_factory=threading.Event)

    def cancelled(self) -> bool:
        return self.cancel.is_set()

    def straggle(self) -> bool:
        """Sleeps through the injected delay; True if the run was abandoned meanwhile."""
        if self.delay > 0:
            return self.cancel.wait(self.delay)
        return self.cancelled()

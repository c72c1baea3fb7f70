import itertools
import sys
import threading
import time
from typing import Optional


class Spinner:
    """
    Progress spinner for long simulations.

    Draws on stderr and only when stderr is a terminal, so piped or captured
    output stays byte-identical between runs.
    """

    FRAMES = ["⠋", "⠙", "⠹", "⠸", "⠼", "⠴", "⠦", "⠧", "⠇", "⠏"]

    def __init__(self, message: str = "Simulating", delay: float = 0.1, stream=None):
        """
        Initialize the spinner.

        Args:
            message: Message to display next to the spinner
            delay: Delay between frames in seconds
            stream: Output stream, stderr by default
        """
        self.message = message
        self.delay = delay
        self.stream = stream or sys.stderr
        self._frames = itertools.cycle(self.FRAMES)
        self._running = False
        self._thread: Optional[threading.Thread] = None
        self.interactive = bool(getattr(self.stream, "isatty", lambda: False)())

    def _spin(self):
        while self._running:
            self.stream.write(f"\r{next(self._frames)} {self.message}... ")
            self.stream.flush()
            time.sleep(self.delay)

    def start(self, message: Optional[str] = None):
        if message:
            self.message = message
        if not self.interactive or self._running:
            return
        self._running = True
        self._thread = threading.Thread(target=self._spin, daemon=True)
        self._thread.start()

    def stop(self):
        if not self._running:
            return
        self._running = False
        if self._thread:
            self._thread.join()
        self.stream.write("\r" + " " * (len(self.message) + 12) + "\r")
        self.stream.flush()

    def __enter__(self):
        self.start()
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        self.stop()
        return False

"""Terminal spinner showing the simulated time of a running integration."""

import sys
import threading
import time
from contextlib import contextmanager


class Spinner:
    """Braille spinner with a simulated-time readout."""

    def __init__(self, message="Integrating"):
        self.message = message
        self.frames = ['⠋', '⠙', '⠹', '⠸', '⠼', '⠴', '⠦', '⠧', '⠇', '⠏']
        self.running = False
        self.thread = None
        self.sim_time = None
        self.t_end = None
        self._width = 0

    def start(self):
        """Start the spinner animation."""
        self.running = True
        self.thread = threading.Thread(target=self._animate)
        self.thread.daemon = True
        self.thread.start()

    def stop(self):
        """Stop the spinner and clear the line."""
        self.running = False
        if self.thread:
            self.thread.join(timeout=0.2)
        sys.stdout.write('\r' + ' ' * self._width + '\r')
        sys.stdout.flush()

    def update(self, sim_time: float, t_end: float) -> None:
        """Progress callback for the integration driver."""
        self.sim_time = sim_time
        self.t_end = t_end

    def status_line(self, frame: str) -> str:
        line = f"{frame} {self.message}"
        if self.sim_time is not None and self.t_end:
            line += f"  t = {self.sim_time:.4f} / {self.t_end:g} ({100.0 * self.sim_time / self.t_end:5.1f}%)"
        else:
            line += "..."
        return line

    def _animate(self):
        frame_index = 0
        while self.running:
            line = self.status_line(self.frames[frame_index % len(self.frames)])
            self._width = max(self._width, len(line))
            sys.stdout.write('\r' + line)
            sys.stdout.flush()
            time.sleep(0.1)
            frame_index += 1


@contextmanager
def spinner(message="Integrating"):
    """Context manager for spinner usage; yields the Spinner so its `update` can be passed as progress."""
    s = Spinner(message)
    try:
        s.start()
        yield s
    finally:
        s.stop()

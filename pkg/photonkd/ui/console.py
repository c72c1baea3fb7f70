import csv
import sys
from typing import Iterable, Sequence, TextIO

try:
    from colorama import Fore, Style

    HAS_COLOR = True
except ImportError:
    HAS_COLOR = False

    class _NoColor:
        def __getattr__(self, name):
            return ""

    Fore = _NoColor()
    Style = _NoColor()


class Console:
    """
    Terminal output for the CLI.

    Results (tables, CSV, JSON) go to ``out`` undecorated; titles, notes and
    errors are human-facing and coloured only when the stream is a terminal.
    """

    def __init__(self, out: TextIO = None, err: TextIO = None, width: int = 80):
        """
        Args:
            out: Stream for results, stdout by default
            err: Stream for errors, stderr by default
            width: Width of rules drawn under titles
        """
        self.out = out or sys.stdout
        self.err = err or sys.stderr
        self.width = width

    def _colored(self, stream: TextIO, text: str, color: str) -> str:
        if HAS_COLOR and getattr(stream, "isatty", lambda: False)():
            return color + text + Style.RESET_ALL
        return text

    def print_title(self, title: str):
        """
        Print a section title with a rule beneath it.

        Args:
            title: Section title
        """
        print(self._colored(self.out, title, Fore.CYAN + Style.BRIGHT), file=self.out)
        print(self._colored(self.out, "-" * min(self.width, len(title)), Fore.CYAN), file=self.out)

    def print_line(self, text: str = ""):
        print(text, file=self.out)

    def print_rows(self, rows: Iterable[Sequence[str]]):
        """Write rows as CSV; fields holding commas get quoted."""
        writer = csv.writer(self.out, lineterminator="\n")
        writer.writerows(rows)

    def print_info(self, message: str):
        print(self._colored(self.out, message, Fore.CYAN), file=self.out)

    def print_success(self, message: str):
        print(self._colored(self.out, message, Fore.GREEN), file=self.out)

    def print_warning(self, message: str):
        print(self._colored(self.err, message, Fore.YELLOW), file=self.err)

    def print_error(self, message: str):
        """
        Print an error message to the error stream.

        Args:
            message: Error message
        """
        if HAS_COLOR and getattr(self.err, "isatty", lambda: False)():
            print(Fore.RED + message + Style.RESET_ALL, file=self.err)
        else:
            print("ERROR:", message, file=self.err)

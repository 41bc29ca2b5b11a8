# -*- coding: utf-8; -*-
"""Colorize terminal output.

Uses Colorama; works on any OS.
"""

__all__ = ["setcolor", "colorize", "ColorScheme",
           "Fore", "Back", "Style"]

from colorama import Back, Fore, Style  # type: ignore[import]
from colorama import init as colorama_init  # type: ignore[import]
colorama_init()


def setcolor(*colors, reset=True):
    """Return a string that, when printed into a terminal, sets the style and color.

    If `reset=True`, reset style and color before setting the requested ones.
    If `reset=False`, augment the current style and color.

    Each entry of `colors` is a `Fore`, `Back` or `Style` value, or a tuple
    (arbitrarily nested) of them, which is handy for compound styles.

    The style stays in effect until the next call to `setcolor`.
    To reset, use `setcolor()`.
    """
    def _setcolor(color):
        if isinstance(color, (list, tuple)):
            return "".join(_setcolor(elt) for elt in color)
        return color
    out = [_setcolor(Style.RESET_ALL)] if reset else []
    out.append(_setcolor(colors))
    return "".join(out)


def colorize(text, *colors):
    """Colorize string `text` for terminal display, resetting the style after it.

    Usage::

        print(colorize("converged", Fore.GREEN))
        print(colorize("budget exhausted", Style.BRIGHT, Fore.YELLOW))

    Does not nest. To set a color until further notice, use `setcolor`.
    """
    return "{}{}{}".format(setcolor(colors),
                           text,
                           setcolor())


class ColorScheme:
    """The color scheme for terminal output of `metafix`.

    Just a bunch of constants. To change the colors, assign new values to them;
    changes take effect immediately for any new output. Don't replace the
    object itself; all use sites from-import it.

    See `Fore`, `Back`, `Style` for valid values. For a compound style,
    place the values into a tuple.
    """
    def __init__(self):
        # log records
        self.LOGDEBUG = Style.DIM
        self.LOGINFO = Fore.LIGHTBLUE_EX
        self.LOGWARNING = (Style.BRIGHT, Fore.YELLOW)
        self.LOGERROR = (Style.BRIGHT, Fore.RED)
        self.LOGGERNAME = Style.DIM

        # command-line reports
        self.HEADING1 = (Style.BRIGHT, Fore.LIGHTBLUE_EX)
        self.SUCCESS = (Style.BRIGHT, Fore.GREEN)
        self.FAILURE = (Style.BRIGHT, Fore.RED)

        # runtests
        self.TESTHEADING = self.HEADING1
        self.TESTPASS = (Style.BRIGHT, Fore.GREEN)
        self.TESTFAIL = (Style.BRIGHT, Fore.RED)
        self.TESTERROR = (Style.BRIGHT, Fore.YELLOW)

    def keys(self):
        """Names of all settings."""
        return list(vars(self).keys())
ColorScheme = ColorScheme()  # type: ignore[assignment, misc]

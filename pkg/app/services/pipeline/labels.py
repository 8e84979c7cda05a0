import re

from ..corpus import Label

_WORD = re.compile(r"[^\W_]+")


def parse_label(completion_text: str) -> Label:
    """
    Reads a spam/ham label from a free-text completion.

    The text is lowercased and split into runs of letters and digits, so any
    punctuation, symbol or whitespace separates words. The first word equal to
    "spam" or "ham" decides. Without one the result is UNPARSEABLE; this never
    raises.

    Examples:
        "Ham."                             -> HAM
        "Answer:spam"                      -> SPAM
        "This is clearly spam because ..." -> SPAM
        "I cannot determine this."         -> UNPARSEABLE
    """
    for word in _WORD.findall((completion_text or "").lower()):
        if word == "spam":
            return Label.SPAM
        if word == "ham":
            return Label.HAM
    return Label.UNPARSEABLE

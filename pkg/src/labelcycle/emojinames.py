"""Emoji codepoint -> snake_case name table.

The table is generated from the Unicode character database at import time
so it needs no bundled data file. Codepoints inside the emoji blocks that
have no character name map to "emoji_unknown"; joiners, variation
selectors, and skin-tone modifiers are dropped so that a modified emoji
yields its base name only.
"""

import unicodedata

# Blocks that hold pictographic characters worth naming. Symbols outside
# these blocks are left for punctuation stripping to discard.
EMOJI_RANGES: tuple[tuple[int, int], ...] = (
    (0x2600, 0x27BF),    # misc symbols, dingbats
    (0x2B00, 0x2BFF),    # arrows, stars
    (0x1F000, 0x1F0FF),  # mahjong, dominoes, cards
    (0x1F1E6, 0x1F1FF),  # regional indicators
    (0x1F300, 0x1F5FF),  # misc symbols and pictographs
    (0x1F600, 0x1F64F),  # emoticons
    (0x1F680, 0x1F6FF),  # transport and map
    (0x1F900, 0x1F9FF),  # supplemental symbols
    (0x1FA70, 0x1FAFF),  # extended symbols
)

# Combining machinery, not emoji in their own right.
DROPPED_CODEPOINTS = frozenset(
    {0x200D, 0xFE0E, 0xFE0F} | set(range(0x1F3FB, 0x1F3FF + 1))
)

UNKNOWN_NAME = "emoji_unknown"


def _snake(name: str) -> str:
    return name.lower().replace(" ", "_").replace("-", "_")


def build_name_map() -> dict[int, str]:
    table: dict[int, str] = {}
    for lo, hi in EMOJI_RANGES:
        for cp in range(lo, hi + 1):
            if cp in DROPPED_CODEPOINTS:
                continue
            try:
                table[cp] = _snake(unicodedata.name(chr(cp)))
            except ValueError:
                continue  # unassigned; handled as emoji_unknown at use
    return table


EMOJI_NAMES: dict[int, str] = build_name_map()


def in_emoji_block(cp: int) -> bool:
    return any(lo <= cp <= hi for lo, hi in EMOJI_RANGES)

"""Fixed word vocabulary for relation descriptions.

Token IDs are laid out as:

- ``0``: PAD, ``1``: EOT
- ``2 .. 63``: template words (relation descriptions and the generic
  intra-sample sentence)
- ``64 .. V-1``: content tokens of item texts

The layout is identical for every dataset, so a relation description
tokenizes to the same IDs regardless of the vocabulary size.
"""

from __future__ import annotations

from ..exceptions import ConfigurationError, VocabularyError
from ..models.domain.records import EOT_ID, PAD_ID

FIRST_TEMPLATE_ID = 2
FIRST_CONTENT_ID = 64

GENERIC_INTRA_TEXT = "text and image describe the same item"
RELATION_TEMPLATE = "users interested in {name} tend to buy together"

RELATION_TYPE_NAMES: tuple[str, ...] = (
    "fishing",
    "camping",
    "baking",
    "gardening",
    "cycling",
    "painting",
    "hiking",
    "yoga",
    "gaming",
    "knitting",
    "running",
    "photography",
    "coffee",
    "travel",
    "music",
    "skincare",
)


def _template_words() -> tuple[str, ...]:
    words: list[str] = []
    for sentence in (GENERIC_INTRA_TEXT, RELATION_TEMPLATE.format(name=""), *RELATION_TYPE_NAMES):
        for word in sentence.split():
            if word not in words:
                words.append(word)
    return tuple(words)


TEMPLATE_WORDS = _template_words()
_WORD_IDS = {word: FIRST_TEMPLATE_ID + i for i, word in enumerate(TEMPLATE_WORDS)}
assert FIRST_TEMPLATE_ID + len(TEMPLATE_WORDS) <= FIRST_CONTENT_ID

__all__ = [
    "EOT_ID",
    "FIRST_CONTENT_ID",
    "GENERIC_INTRA_TEXT",
    "PAD_ID",
    "RELATION_TYPE_NAMES",
    "canonical_relation_texts",
    "generic_intra_tokens",
    "relation_text_tokens",
    "tokenize",
]


def tokenize(sentence: str) -> tuple[int, ...]:
    """Map a template sentence to token IDs and append EOT.

    Raises
    ------
    VocabularyError
        If a word is not a template word

    """
    try:
        ids = tuple(_WORD_IDS[word] for word in sentence.split())
    except KeyError as e:
        raise VocabularyError(f"word {e.args[0]!r} is not in the template vocabulary") from e
    return (*ids, EOT_ID)


def generic_intra_tokens() -> tuple[int, ...]:
    return tokenize(GENERIC_INTRA_TEXT)


def relation_type_name(relation_type: int) -> str:
    if not 0 <= relation_type < len(RELATION_TYPE_NAMES):
        raise ConfigurationError(
            f"relation type {relation_type} has no name; at most {len(RELATION_TYPE_NAMES)} types are supported"
        )
    return RELATION_TYPE_NAMES[relation_type]


def relation_text_tokens(relation_type: int) -> tuple[int, ...]:
    """Tokenized description of ``relation_type``, also its canonical text."""
    return tokenize(RELATION_TEMPLATE.format(name=relation_type_name(relation_type)))


def canonical_relation_texts(num_types: int) -> list[tuple[int, ...]]:
    return [relation_text_tokens(r) for r in range(num_types)]

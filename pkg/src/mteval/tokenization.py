"""Whitespace and WordPiece tokenization.

Whitespace tokens feed the static-embedding metrics and BLEU; WordPiece
subwords feed the decontextualized metrics and the surface length
features.  The WordPiece vocabulary file holds one subword per line
(continuation pieces prefixed with ``##``), UTF-8, line order preserved.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from mteval.errors import DataError

# Whitespace tokens longer than this are mapped straight to the unknown
# token instead of being decomposed character by character.
MAX_WORDPIECE_INPUT_CHARS = 100


@dataclass(frozen=True)
class WordPieceVocab:
    entries: tuple[str, ...]
    unk_token: str = "[UNK]"

    def __post_init__(self):
        if not self.entries:
            raise DataError("WordPiece vocabulary is empty")
        if self.unk_token not in self.entries:
            raise DataError(f"unknown-token {self.unk_token!r} missing from the vocabulary")
        object.__setattr__(self, "_lookup", frozenset(self.entries))

    def __contains__(self, piece: str) -> bool:
        return piece in self._lookup


def load_wordpiece_vocab(path: str | Path, unk_token: str = "[UNK]") -> WordPieceVocab:
    entries = []
    with open(path, encoding="utf-8") as handle:
        for line in handle:
            token = line.rstrip("\n")
            if token:
                entries.append(token)
    return WordPieceVocab(entries=tuple(entries), unk_token=unk_token)


def whitespace_tokenize(text: str) -> list[str]:
    """Split on Unicode whitespace, dropping empty tokens; no normalization."""
    return text.split()


def wordpiece_tokenize(text: str, vocab: WordPieceVocab) -> list[str]:
    """Greedy longest-match-first subword segmentation.

    Each whitespace token is decomposed independently: the first piece is
    matched as-is, later pieces against ``##``-prefixed entries.  A token
    with no full decomposition (or longer than MAX_WORDPIECE_INPUT_CHARS)
    becomes the single unknown token.
    """
    pieces: list[str] = []
    for token in whitespace_tokenize(text):
        pieces.extend(_split_token(token, vocab))
    return pieces


def _split_token(token: str, vocab: WordPieceVocab) -> list[str]:
    if len(token) > MAX_WORDPIECE_INPUT_CHARS:
        return [vocab.unk_token]
    pieces = []
    start = 0
    while start < len(token):
        end = len(token)
        match = None
        while start < end:
            piece = token[start:end]
            if start > 0:
                piece = "##" + piece
            if piece in vocab:
                match = piece
                break
            end -= 1
        if match is None:
            return [vocab.unk_token]
        pieces.append(match)
        start = end
    return pieces

"""Fuzzy matching of configuration keys for "did you mean" suggestions."""
import logging
import re
from difflib import SequenceMatcher
from typing import Iterable, List, Optional, Tuple

logger = logging.getLogger(__name__)


class KeyMatcher:
    """Scores a mistyped key against the known keys."""

    def __init__(self, similarity_threshold: float = 0.6):
        """Initialize key matcher.

        Args:
            similarity_threshold: Minimum similarity score for a suggestion (0.0-1.0)
        """
        self.similarity_threshold = similarity_threshold

    def normalize_key(self, key: str) -> str:
        """Lowercase, with dashes, spaces and dots folded to underscores."""
        return re.sub(r"[-\s.]+", "_", key.strip().lower())

    def calculate_similarity(self, key1: str, key2: str) -> float:
        """Similarity between two keys.

        The dotted path and its last component are both compared, so
        `solver.tend` still finds `solver.t_end`.

        Returns:
            Similarity score between 0.0 and 1.0
        """
        if not key1 or not key2:
            return 0.0
        norm1 = self.normalize_key(key1)
        norm2 = self.normalize_key(key2)
        if norm1 == norm2:
            return 1.0
        full = SequenceMatcher(None, norm1, norm2).ratio()
        leaf = SequenceMatcher(None, self.normalize_key(key1.split(".")[-1]), self.normalize_key(key2.split(".")[-1])).ratio()
        return max(full, leaf)

    def find_best_matches(self, key: str, candidates: Iterable[str], max_matches: int = 3) -> List[Tuple[str, float]]:
        """Candidates scoring at least the threshold, best first."""
        matches = [(candidate, self.calculate_similarity(key, candidate)) for candidate in candidates]
        matches = [m for m in matches if m[1] >= self.similarity_threshold]
        matches.sort(key=lambda m: m[1], reverse=True)
        return matches[:max_matches]

    def suggest(self, key: str, candidates: Iterable[str]) -> Optional[str]:
        matches = self.find_best_matches(key, candidates, max_matches=1)
        return matches[0][0] if matches else None

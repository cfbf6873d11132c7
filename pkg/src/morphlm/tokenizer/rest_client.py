"""Client for an external morphological analyzer behind a REST endpoint.

Wire contract (JSON over POST {base_url}/analyze):

    request:  {"words": ["ndakunda", "kunda", ...]}
    response: {"analyses": [
        {"status": "ok",
         "segments": [{"stem": "kunda", "affixes": ["nda"], "pos": "V"}, ...]},
        {"status": "unanalyzable", "segments": []},
        ...
    ]}

analyses is index-aligned with words; segments lists candidate analyses for
one word (may be several when the analyzer is ambiguous). The client maps the
payload onto the same response type the built-in grammar analyzer returns, so
the two are interchangeable wherever an analyzer is expected.
"""

from typing import List, Sequence

import requests

from .grammar import Analysis, AnalyzerResponse, UNANALYZABLE


class AnalyzerProtocolError(RuntimeError):
    """The analyzer endpoint returned something off-contract."""


class RestAnalyzer:
    def __init__(self, base_url: str, timeout: float = 10.0, session=None):
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout
        self._session = session if session is not None else requests.Session()

    def analyze_batch(self, words: Sequence[str]) -> List[AnalyzerResponse]:
        if not words:
            return []
        resp = self._session.post(
            f"{self.base_url}/analyze",
            json={"words": list(words)},
            timeout=self.timeout,
        )
        if resp.status_code != 200:
            raise AnalyzerProtocolError(
                f"analyzer returned HTTP {resp.status_code}: {resp.text[:200]}"
            )
        try:
            payload = resp.json()
            analyses = payload["analyses"]
        except (ValueError, KeyError, TypeError) as e:
            raise AnalyzerProtocolError(f"malformed analyzer payload: {e}") from None
        if not isinstance(analyses, list) or len(analyses) != len(words):
            raise AnalyzerProtocolError(
                f"expected {len(words)} analyses, got "
                f"{len(analyses) if isinstance(analyses, list) else type(analyses)}"
            )
        return [self._parse_one(entry) for entry in analyses]

    def analyze_word(self, word: str) -> AnalyzerResponse:
        return self.analyze_batch([word])[0]

    @staticmethod
    def _parse_one(entry: dict) -> AnalyzerResponse:
        try:
            status = entry["status"]
            if status != "ok":
                return UNANALYZABLE
            segments = tuple(
                Analysis(
                    stem=seg["stem"],
                    affixes=tuple(seg["affixes"]),
                    pos=seg["pos"],
                )
                for seg in entry["segments"]
            )
        except (KeyError, TypeError) as e:
            raise AnalyzerProtocolError(f"malformed analysis entry: {e}") from None
        if not segments:
            return UNANALYZABLE
        return AnalyzerResponse(status="ok", segments=segments)

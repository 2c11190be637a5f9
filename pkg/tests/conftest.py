from __future__ import annotations

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from transcascade.engine import AnnotatedDocument  # noqa: E402
from transcascade.packs import load_cascade  # noqa: E402
from transcascade.transcript import parse_transcription  # noqa: E402

FIXTURES = Path(__file__).parent / "fixtures"
FIXTURE_NAMES = sorted(p.stem for p in (FIXTURES / "raw").glob("*.trs"))


def raw_doc(name: str) -> AnnotatedDocument:
    path = FIXTURES / "raw" / f"{name}.trs"
    return AnnotatedDocument.from_document(parse_transcription(path.read_bytes(), str(path)))


def gold_doc(name: str) -> AnnotatedDocument:
    path = FIXTURES / "gold" / f"{name}.trs"
    return AnnotatedDocument.from_document(parse_transcription(path.read_bytes(), str(path)))


@pytest.fixture(scope="session")
def ne_cascade():
    return load_cascade("ne")


@pytest.fixture(scope="session")
def de_cascade():
    return load_cascade("de")


def doc_xml(*turns: str, speakers=None) -> str:
    """A minimal transcription; each turn is body text, or (speaker, body)."""
    parts, t = [], 0
    for i, turn in enumerate(turns):
        spk, body = turn if isinstance(turn, tuple) else (f"spk{i % 2 + 1}", turn)
        parts.append(f'<Turn speaker="{spk}" startTime="{t}" endTime="{t + 5}"><Sync time="{t}"/>{body}</Turn>')
        t += 5
    return (
        '<?xml version="1.0" encoding="UTF-8"?>\n<Trans><Episode><Section type="report" startTime="0" '
        f'endTime="{t}">' + "".join(parts) + "</Section></Episode></Trans>\n"
    )

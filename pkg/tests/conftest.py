import numpy as np
import pytest

from protgram.corpus import RESIDUES, SEPARATOR


def random_tokens(rng, n_tokens, sep_rate=0.05):
    alphabet = list(RESIDUES) + [SEPARATOR]
    p = np.full(len(alphabet), (1 - sep_rate) / len(RESIDUES))
    p[-1] = sep_rate
    return list(rng.choice(alphabet, size=n_tokens, p=p))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def write_fasta(tmp_path):
    def _write(text, name="x.fa"):
        path = tmp_path / name
        path.write_text(text)
        return path

    return _write


ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def record_criterion(number: int, ok: bool, detail: str) -> None:
    """Remember an acceptance result so the terminal summary can list it."""
    ACCEPTANCE[number] = (bool(ok), detail)
    print(f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} criterion {number:2d}: {detail}")

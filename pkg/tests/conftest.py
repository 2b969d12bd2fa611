import pathlib
import sys

import pytest

sys.path.insert(0, str(pathlib.Path(__file__).parent))

from sublock.bench import parse_bench

FIXTURES = pathlib.Path(__file__).parent / "fixtures"

HALF_ADDER = """\
INPUT(A)
INPUT(B)
OUTPUT(S)
OUTPUT(C)
S = XOR(A, B)
C = AND(A, B)
"""


@pytest.fixture(scope="session")
def fixtures_dir():
    return FIXTURES


@pytest.fixture(scope="session")
def c17_text():
    return (FIXTURES / "c17.bench").read_text()


@pytest.fixture()
def c17(c17_text):
    return parse_bench(c17_text)


@pytest.fixture()
def half_adder():
    return parse_bench(HALF_ADDER)


@pytest.fixture()
def demo5():
    return parse_bench((FIXTURES / "demo5.bench").read_text())

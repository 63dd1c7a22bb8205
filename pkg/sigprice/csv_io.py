"""
CSV formats.

    path         t,x1,...,xd
    signature    level,word,value
    correlators  request_id,value,std_error,n_paths
    polynomial   m1,...,mn,alpha
    price        method,variant,price,std_error,terms,n_paths,seed,series_tail,smoothing_bias,radius
    convergence  order,expansion,expansion_se,direct,direct_se,gap,tail,smoothing_bias,bound

Floats are written with ``repr`` so they read back bit-exact.
"""

import csv
import io
import logging
from contextlib import contextmanager
from pathlib import Path
from typing import IO, Iterable, Iterator, List, Sequence, Tuple, Union

import numpy as np

from sigprice.algebra import parse_word
from sigprice.approx import MultiIndexPolynomial
from sigprice.errors import PathError, ScenarioError, WordParseError
from sigprice.models import ConvergenceRow, CorrelatorRow, PriceReport
from sigprice.signature import SampledPath, TruncatedSignature, signature_rows

logger = logging.getLogger(__name__)

Target = Union[str, Path, IO[str]]


@contextmanager
def _open_for_write(target: Target) -> Iterator[IO[str]]:
    if isinstance(target, (str, Path)):
        Path(target).parent.mkdir(parents=True, exist_ok=True)
        with open(target, "w", newline="", encoding="utf-8") as handle:
            yield handle
    else:
        yield target


def _writer(handle: IO[str]):
    return csv.writer(handle, lineterminator="\n")


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write_rows(target: Target, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    with _open_for_write(target) as handle:
        writer = _writer(handle)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(v) for v in row])


# ---------- paths ----------

def write_path_csv(target: Target, path: SampledPath) -> None:
    header = ["t"] + [f"x{i + 1}" for i in range(path.dim)]
    rows = ([float(t)] + [float(v) for v in values] for t, values in zip(path.times, path.values))
    _write_rows(target, header, rows)


def read_path_csv(source: Union[str, Path]) -> SampledPath:
    """Read a path CSV; problems are reported with their line number."""
    source = Path(source)
    if not source.exists():
        raise ScenarioError(f"Path file not found: {source}")
    with open(source, newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if not header or header[0] != "t" or len(header) < 2:
            raise ScenarioError(f"{source}:1: expected header 't,x1,...,xd', got {header}")
        times, values = [], []
        for line, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise ScenarioError(f"{source}:{line}: expected {len(header)} fields, got {len(row)}")
            try:
                numbers = [float(cell) for cell in row]
            except ValueError as e:
                raise ScenarioError(f"{source}:{line}: {e}") from e
            times.append(numbers[0])
            values.append(numbers[1:])
    try:
        return SampledPath(np.array(times), np.array(values).reshape(len(times), len(header) - 1))
    except PathError as e:
        raise ScenarioError(f"{source}: {e}") from e


# ---------- signatures ----------

def write_signature_csv(target: Target, sig: TruncatedSignature) -> None:
    _write_rows(target, ["level", "word", "value"], signature_rows(sig))


def read_signature_csv(source: Union[str, Path, IO[str]]) -> List[Tuple[int, str, float]]:
    if isinstance(source, (str, Path)):
        text = Path(source).read_text(encoding="utf-8")
    else:
        text = source.read()
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header != ["level", "word", "value"]:
        raise ScenarioError(f"expected header 'level,word,value', got {header}")
    rows = []
    for line, row in enumerate(reader, start=2):
        try:
            rows.append((int(row[0]), row[1], float(row[2])))
        except (ValueError, IndexError) as e:
            raise ScenarioError(f"signature CSV line {line}: {e}") from e
    check_signature_rows(rows)
    return rows


def signature_dim(rows: Sequence[Tuple[int, str, float]]) -> int:
    """Alphabet size implied by the number of level-1 rows."""
    return sum(1 for level, _, _ in rows if level == 1)


def check_signature_rows(rows: Sequence[Tuple[int, str, float]]) -> None:
    """Words must match their level and every level must be complete."""
    dim = signature_dim(rows)
    for level, word, _ in rows:
        try:
            letters = parse_word(word, dim)
        except WordParseError as e:
            raise ScenarioError(f"signature CSV: {e}") from e
        if len(letters) != level:
            raise ScenarioError(f"signature CSV: word {word!r} listed at level {level}")
    depth = max((level for level, _, _ in rows), default=0)
    expected = sum(dim ** k for k in range(depth + 1))
    if len(rows) != expected:
        raise ScenarioError(
            f"signature CSV: {len(rows)} rows, a depth-{depth} signature over {dim} letters has {expected}"
        )


# ---------- results ----------

def write_correlator_csv(target: Target, rows: Sequence[CorrelatorRow]) -> None:
    _write_rows(
        target,
        ["request_id", "value", "std_error", "n_paths"],
        ((r.request_id, r.value, r.std_error, r.n_paths) for r in rows),
    )


def write_polynomial_csv(target: Target, poly: MultiIndexPolynomial) -> None:
    header = [f"m{i + 1}" for i in range(poly.n_vars)] + ["alpha"]
    _write_rows(target, header, (list(index) + [coef] for index, coef in poly.terms.items()))


PRICE_FIELDS = (
    "method", "variant", "price", "std_error", "terms", "n_paths", "seed", "series_tail", "smoothing_bias", "radius"
)


def write_price_csv(target: Target, reports: Sequence[PriceReport]) -> None:
    _write_rows(target, PRICE_FIELDS, ([getattr(r, f) for f in PRICE_FIELDS] for r in reports))


CONVERGENCE_FIELDS = (
    "order", "expansion", "expansion_se", "direct", "direct_se", "gap", "tail", "smoothing_bias", "bound"
)


def write_convergence_csv(target: Target, rows: Sequence[ConvergenceRow]) -> None:
    _write_rows(target, CONVERGENCE_FIELDS, ([getattr(r, f) for f in CONVERGENCE_FIELDS] for r in rows))

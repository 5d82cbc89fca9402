import io
import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from square.block_data import (
    BlockPartition,
    SqdDataset,
    detect_pattern,
    ingest_csv,
    load_partition_config,
    make_partition,
    split_blocks,
    write_csv,
)
from square.exceptions import CsvParseError, DataError, InvalidPartitionError, PatternError

from .oracles import sqd_arrays

NA = np.nan


# -- partitions -------------------------------------------------------------

def test_structure_one_partition():
    part = make_partition(28, (3, 5, 5, 5, 5, 5))
    assert part.M == 5
    assert part.sizes == (3, 5, 5, 5, 5, 5)
    assert part.blocks[0] == (0, 1, 2)
    assert part.blocks[5] == tuple(range(23, 28))


def test_structure_two_partition():
    part = make_partition(28, (3, 15, 5, 5))
    assert part.M == 3
    assert part.blocks[1] == tuple(range(3, 18))


def test_empty_common_block_allowed():
    part = make_partition(3, (0, 1, 2))
    assert part.blocks == ((), (0,), (1, 2))
    assert part.common == ()


def test_partition_size_mismatch():
    with pytest.raises(InvalidPartitionError):
        make_partition(10, (3, 5))


@pytest.mark.parametrize("blocks", [
    [[0, 1], [1, 2]],          # overlap
    [[0], [2]],                # gap
    [[0, 1, 2]],               # M = 0
    [[0], [1, 2], []],         # empty non-common block
])
def test_invalid_index_sets(blocks):
    with pytest.raises(InvalidPartitionError):
        BlockPartition.from_index_sets(blocks)


def test_index_sets_need_not_be_contiguous():
    part = BlockPartition.from_index_sets([[4], [0, 2], [1, 3]])
    assert part.p == 5
    assert part.observed(1) == (0, 2, 4)


def test_partition_dict_round_trip():
    part = BlockPartition.from_index_sets([[4], [0, 2], [1, 3]])
    assert BlockPartition.from_dict(part.to_dict()) == part
    assert BlockPartition.from_dict({"block_sizes": [1, 2]}) == make_partition(3, (1, 2))


# -- pattern detection ------------------------------------------------------

def test_complete_data_all_in_s0():
    part = make_partition(4, (2, 1, 1))
    X = np.arange(12.0).reshape(3, 4)
    rep = detect_pattern(np.zeros(3), X, part)
    assert rep.ok
    assert rep.groups()[0].tolist() == [0, 1, 2]


def test_overlapping_pattern_is_a_violation():
    part = make_partition(4, (1, 1, 1, 1))  # M = 3
    X = np.array([[1.0, 1.0, 1.0, NA]])   # sees common + blocks 1 and 2
    rep = detect_pattern([0.0], X, part)
    assert not rep.ok
    assert rep.violations[0][0] == 0
    assert "overlapping" in rep.violations[0][1]


def test_four_case_toy_groups():
    # masks: complete, S1, S1, S2  (hand-enumerated)
    part = make_partition(3, (1, 1, 1))
    X = np.array([[1.0, 2.0, 3.0],
                  [1.0, 2.0, NA],
                  [1.0, 2.0, NA],
                  [1.0, NA, 3.0]])
    rep = detect_pattern(np.zeros(4), X, part)
    assert rep.ok
    assert [g.tolist() for g in rep.groups()] == [[0], [1, 2], [3]]


@pytest.mark.parametrize("row, phrase", [
    ([NA, 2.0, NA], "common block"),
    ([1.0, NA, NA], "no non-common block"),
])
def test_violation_descriptions(row, phrase):
    part = make_partition(3, (1, 1, 1))
    rep = detect_pattern([0.0], np.array([row]), part)
    assert phrase in rep.violations[0][1]


def test_missing_response_is_violation():
    part = make_partition(2, (1, 1))
    rep = detect_pattern([NA], np.array([[1.0, 2.0]]), part)
    assert rep.violations == [(0, "response missing")]


def test_from_arrays_rejects_and_lists_cases():
    part = make_partition(3, (1, 1, 1))
    X = np.array([[1.0, 2.0, 3.0], [NA, 2.0, NA], [1.0, NA, NA]])
    with pytest.raises(PatternError) as exc:
        SqdDataset.from_arrays(np.zeros(3), X, part)
    assert [i for i, _ in exc.value.violations] == [1, 2]
    assert "case 1" in str(exc.value)


@st.composite
def sqd_case(draw):
    sizes = draw(st.lists(st.integers(1, 3), min_size=2, max_size=4))
    sizes[0] = draw(st.integers(0, 2))
    n0 = draw(st.integers(1, 4))
    ng = draw(st.lists(st.integers(0, 4), min_size=len(sizes) - 1, max_size=len(sizes) - 1))
    seed = draw(st.integers(0, 2**32 - 1))
    y, X = sqd_arrays(np.random.default_rng(seed), sizes, n0, ng)
    return sizes, y, X, seed


@given(sqd_case())
def test_detect_pattern_order_independent_and_idempotent(case):
    sizes, y, X, seed = case
    part = make_partition(sum(sizes), sizes)
    rep = detect_pattern(y, X, part)
    assert rep.ok
    assert np.array_equal(detect_pattern(y, X, part).assignment, rep.assignment)
    perm = np.random.default_rng(seed).permutation(len(y))
    rep_p = detect_pattern(y[perm], X[perm], part)
    assert np.array_equal(rep_p.assignment, rep.assignment[perm])


@given(sqd_case())
def test_split_blocks_bookkeeping(case):
    sizes, y, X, _ = case
    part = make_partition(sum(sizes), sizes)
    ds = SqdDataset.from_arrays(y, X, part)
    blocks = split_blocks(ds)
    assert len(blocks) == part.M + 2
    for blk in blocks:
        for r, i in enumerate(blk.cases):
            assert blk.y[r] == y[i]
            for c, j in enumerate(blk.covariates):
                assert blk.X[r, c] == X[i, j]
        assert not np.isnan(blk.X).any()
    assert blocks[1].skip == (sizes[0] == 0)


def test_split_blocks_shapes():
    rng = np.random.default_rng(0)
    y, X = sqd_arrays(rng, (1, 2, 2), 2, 3)
    ds = SqdDataset.from_arrays(y, X, make_partition(5, (1, 2, 2)))
    assert [b.shape for b in split_blocks(ds)] == [(2, 5), (6, 1), (3, 2), (3, 2)]
    # D_1 rows run through S_1 then S_2
    assert split_blocks(ds)[1].cases.tolist() == [2, 3, 4, 5, 6, 7]


def test_split_blocks_empty_common():
    rng = np.random.default_rng(1)
    y, X = sqd_arrays(rng, (0, 1, 1), 3, 2)
    blocks = split_blocks(SqdDataset.from_arrays(y, X, make_partition(2, (0, 1, 1))))
    assert blocks[1].shape == (4, 0)
    assert blocks[1].skip


def test_split_blocks_m_equals_one():
    rng = np.random.default_rng(2)
    y, X = sqd_arrays(rng, (1, 2), 4, 3)
    assert len(split_blocks(SqdDataset.from_arrays(y, X, make_partition(3, (1, 2))))) == 3


def test_dataset_arrays_are_read_only():
    rng = np.random.default_rng(3)
    y, X = sqd_arrays(rng, (1, 1), 3, 2)
    ds = SqdDataset.from_arrays(y, X, make_partition(2, (1, 1)))
    with pytest.raises(ValueError):
        ds.X[0, 0] = 1.0


# -- CSV --------------------------------------------------------------------

SIX_ROWS = """y,a,b,c
1.5,0.1,0.2,0.3
2.0,1,2,3
-1,0.5,NA,7
3.25,0.25,NA,1e-3
0,2,4,NA
4,-1,0,NA
"""


def test_ingest_six_rows():
    part = make_partition(3, (1, 1, 1))
    ds = ingest_csv(io.StringIO(SIX_ROWS), part)
    assert ds.n == 6
    assert ds.covariate_names == ("a", "b", "c")
    assert [g.tolist() for g in ds.groups] == [[0, 1], [4, 5], [2, 3]]
    assert ds.y.tolist() == [1.5, 2.0, -1.0, 3.25, 0.0, 4.0]
    assert ds.X[3, 2] == 1e-3


def test_ingest_response_column_anywhere():
    text = "a,y,b\n1,2,3\n4,5,NA\n"
    ds = ingest_csv(io.StringIO(text), make_partition(2, (0, 1, 1)))
    assert ds.y.tolist() == [2.0, 5.0]
    assert ds.covariate_names == ("a", "b")


def test_ingest_na_response_names_row():
    text = "y,a,b\n1,2,3\nNA,4,5\n"
    with pytest.raises(DataError, match="line 3"):
        ingest_csv(io.StringIO(text), make_partition(2, (1, 1)))


def test_ingest_no_cases():
    with pytest.raises(DataError, match="no cases"):
        ingest_csv(io.StringIO("y,a,b\n"), make_partition(2, (1, 1)))


def test_ingest_bad_number_reports_coordinates():
    text = "y,a,b\n1,2,3\n1,x,3\n"
    with pytest.raises(CsvParseError) as exc:
        ingest_csv(io.StringIO(text), make_partition(2, (1, 1)))
    assert exc.value.line == 3
    assert exc.value.column == "a"


def test_ingest_pattern_violation_lists_cases():
    text = "y,a,b,c\n1,1,2,3\n1,NA,2,NA\n"
    with pytest.raises(PatternError, match="case 1"):
        ingest_csv(io.StringIO(text), make_partition(3, (1, 1, 1)))


def test_ingest_custom_na_marker():
    text = "resp,a,b\n1,2,3\n2,.,3\n"
    ds = ingest_csv(io.StringIO(text), make_partition(2, (0, 1, 1)), response="resp", na=".")
    assert np.isnan(ds.X[1, 0])


def test_csv_round_trip_bit_exact():
    part = make_partition(3, (1, 1, 1))
    ds = ingest_csv(io.StringIO(SIX_ROWS), part)
    buf = io.StringIO()
    write_csv(ds, buf)
    again = ingest_csv(io.StringIO(buf.getvalue()), part)
    assert np.array_equal(again.y, ds.y)
    assert np.array_equal(again.X, ds.X, equal_nan=True)


@given(st.lists(st.floats(allow_nan=False, allow_infinity=False, width=64), min_size=3, max_size=3))
def test_csv_round_trip_any_finite_double(vals):
    ds = SqdDataset.from_arrays([vals[0]], np.array([vals[1:]]), make_partition(2, (1, 1)))
    buf = io.StringIO()
    write_csv(ds, buf)
    again = ingest_csv(io.StringIO(buf.getvalue()), make_partition(2, (1, 1)))
    assert again.y[0] == ds.y[0] and np.array_equal(again.X, ds.X)


def test_partition_config(tmp_path):
    path = tmp_path / "part.json"
    path.write_text(json.dumps({"block_sizes": [3, 5, 5, 5, 5, 5], "response": "y", "na": "NA"}))
    part, response, na = load_partition_config(str(path))
    assert part.M == 5 and response == "y" and na == "NA"
    with pytest.raises(DataError, match="unknown"):
        load_partition_config({"block_sizes": [1, 1], "colour": "red"})

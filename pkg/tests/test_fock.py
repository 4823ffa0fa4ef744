import itertools
from math import comb

import numpy as np
import pytest
from hypothesis import given, strategies as st

from qdsim.fock import (
    LOGICAL_INPUTS,
    SINGLE_ELECTRON,
    TWO_ELECTRON,
    DimensionError,
    EmptySectorError,
    FockState,
    SpinSite,
    annihilation_operator,
    build_basis,
    codeword_mask,
    creation_operator,
    fock_to_logical,
    full_basis,
    logical_to_fock,
    number_operator,
    restrict,
    sector_blocks,
    total_number_operator,
)

MODES = [(site, spin) for site in range(3) for spin in (0, 1)]


def test_full_basis_is_canonical_order(basis):
    assert basis.dim == 64
    ints = [int("".join(map(str, s.occupation)), 2) for s in basis.states]
    assert ints == list(range(64))


@pytest.mark.parametrize("n_up,n_dn", list(itertools.product(range(4), repeat=2)))
def test_sector_dimensions(n_up, n_dn):
    b = build_basis((n_up + n_dn, n_up - n_dn))
    assert b.dim == comb(3, n_up) * comb(3, n_dn)
    assert all(s.sector == (n_up + n_dn, n_up - n_dn) for s in b.states)


@pytest.mark.parametrize("sector", [(7, 1), (2, 1), (1, 3), (-1, 1), (6, 2)])
def test_empty_sector_rejected(sector):
    with pytest.raises(EmptySectorError):
        build_basis(sector)


def test_canonical_anticommutation_exact(basis):
    c = {m: annihilation_operator(basis, basis, m) for m in MODES}
    cd = {m: creation_operator(basis, basis, m) for m in MODES}
    eye = np.eye(64)
    for a in MODES:
        for b in MODES:
            assert np.array_equal(c[a] @ cd[b] + cd[b] @ c[a], eye if a == b else 0 * eye)
            assert not np.any(c[a] @ c[b] + c[b] @ c[a])
            assert not np.any(cd[a] @ cd[b] + cd[b] @ cd[a])


def test_number_operator_is_cdag_c(basis):
    for m in MODES:
        cd = creation_operator(basis, basis, m)
        assert np.array_equal(cd @ cd.T, number_operator(basis, m))


def test_jordan_wigner_sign():
    # c+_{1 up} on |0 up occupied> picks up one minus sign
    b = full_basis()
    s = FockState((1, 0, 0, 0, 0, 0))
    cd = creation_operator(b, b, (1, 0))
    out = FockState((1, 0, 1, 0, 0, 0))
    assert cd[b.index(out), b.index(s)] == -1
    s2 = FockState((0, 0, 0, 0, 0, 0))
    assert cd[b.index(FockState((0, 0, 1, 0, 0, 0))), b.index(s2)] == 1


def test_sector_operator_matches_full_restriction():
    full = full_basis()
    b_in, b_out = build_basis((2, 0)), build_basis((3, 1))
    op = creation_operator(b_in, b_out, (1, 0))
    ref = creation_operator(full, full, (1, 0))
    rows = [full.index(s) for s in b_out.states]
    cols = [full.index(s) for s in b_in.states]
    assert np.array_equal(op, ref[np.ix_(rows, cols)])


def test_sector_mismatch_raises():
    with pytest.raises(DimensionError):
        creation_operator(build_basis((2, 0)), build_basis((3, -1)), (0, 0))
    with pytest.raises(DimensionError):
        creation_operator(build_basis((2, 0)), full_basis(), (0, 0))


def test_spin_site_validation():
    assert SpinSite(2, 1).index == 5
    with pytest.raises(ValueError):
        SpinSite(3, 0)


def test_fock_state_validation():
    with pytest.raises(ValueError):
        FockState((1, 0, 0))
    with pytest.raises(ValueError):
        FockState((2, 0, 0, 0, 0, 0))


def test_encodings_round_trip():
    for enc in (TWO_ELECTRON, SINGLE_ELECTRON):
        seen = set()
        for bits in LOGICAL_INPUTS:
            st_ = logical_to_fock(bits, enc)
            assert fock_to_logical(st_, enc) == bits
            seen.add(st_)
        assert len(seen) == 8
    assert logical_to_fock((1, 1, 1)) == FockState.vacuum()
    assert logical_to_fock((0, 1, 0)).charges == (2, 0, 2)
    assert logical_to_fock((0, 1, 0), SINGLE_ELECTRON).occupation == (1, 0, 0, 0, 1, 0)


def test_leakage_states_have_no_logical_value():
    assert fock_to_logical(FockState((1, 0, 0, 1, 0, 0))) is None
    assert fock_to_logical(logical_to_fock((0, 0, 0)), SINGLE_ELECTRON) is None
    mask = codeword_mask(full_basis())
    assert mask.sum() == 8


def test_logical_bits_validated():
    with pytest.raises(ValueError):
        logical_to_fock((0, 2, 1))
    with pytest.raises(ValueError):
        logical_to_fock((0, 1))


def test_labels():
    assert logical_to_fock((1, 0, 1)).label() == "020"
    assert FockState((1, 0, 0, 1, 0, 0)).label() == "ud0"


def test_sector_blocks_partition(basis):
    blocks = sector_blocks(basis)
    assert sorted(np.concatenate(blocks).tolist()) == list(range(64))
    assert len(blocks) == 16


def test_restrict_keeps_order(basis):
    sub = restrict(basis, [10, 3, 3, 7])
    assert [basis.index(s) for s in sub.states] == [3, 7, 10]


@given(st.lists(st.sampled_from(range(64)), min_size=1, max_size=10))
def test_number_operator_counts_electrons(idx):
    b = full_basis()
    n = total_number_operator(b)
    for i in idx:
        assert n[i, i] == b.states[i].n_electrons

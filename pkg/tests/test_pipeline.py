"""Tests for the pipeline module."""

import pytest

from qcoh.golden import KF3_TABLE
from qcoh.ifunction import build_i
from qcoh.pipeline import f1_limit_residual, flat_limit, g_identity_residual, local_table, matrix_run, scalar_run
from qcoh.presets import canonical_bundle, hirzebruch, projective_line


def test_scalar_run_p1() -> None:
    """Test the scalar run of P1 returns I."""
    spec = projective_line((3,))

    assert scalar_run(spec).J == build_i(spec)


def test_matrix_run_p1() -> None:
    """Test the matrix run of P1 and its cross-checked connection."""
    run = matrix_run(projective_line((3,)))
    omegas = run.omega_hats(check_gauge=True)

    assert run.mirror.is_trivial()
    assert len(omegas) == 1
    assert omegas[0].rational(1, 0) == {(1,): 1}


def test_local_table_needs_canonical_twist() -> None:
    """Test geometries without a canonical twist are refused."""
    with pytest.raises(ValueError, match="no canonical twist"):
        local_table(projective_line((2,)))


@pytest.mark.slow
def test_kf3_table() -> None:
    """Test the K_F3 integers and the undetermined cells."""
    table = local_table(canonical_bundle(3, (3, 6)))

    assert {d: table.gv.get(d) for d in KF3_TABLE} == KF3_TABLE
    assert table.undetermined() == [(0, 0), (2, 1)]


@pytest.mark.slow
def test_f3_limit_is_f1() -> None:
    """Test J' of F3 equals I of F1 after the change of variables."""
    j_prime, _ = flat_limit(matrix_run(hirzebruch(3, (3, 3))))

    assert f1_limit_residual(j_prime) == {}


@pytest.mark.slow
@pytest.mark.parametrize("k", [1, 2])
def test_g_identity(k: int) -> None:
    """Test the shifted J of G_k equals I of G-1 at (y1 y2^k, y2) through hbar^-3."""
    assert g_identity_residual(k, (3, 3)) == {}

"""Acceptance criteria, one test per criterion.

Each test prints a single ``ACCEPTANCE n PASS/FAIL`` line (also collected
into the terminal summary) before asserting.
"""

import csv
import io
import math
import time

import numpy as np
import pytest

from dplab import (
    ShapePotential,
    fundamental_pair,
    resolvent_error,
    resonance_record,
    scan_resonances,
    scatter_finite,
    scatter_limit,
    scattering_convergence,
    transmission_probability,
    save_shape,
)
from dplab.cli import main
from dplab.resolvent_lab import LimitOperator, ResolventProbe
from dplab.potential import PiecewisePolynomial
from dplab.scattering import spike_locations

from conftest import half_psi, odd_phi, random_piecewise_constant, well

WELL_ROOTS = [0.0, (math.pi / 2) ** 2, math.pi**2, (3 * math.pi / 2) ** 2]
RESOLVENT_EPS = [2.0**-n for n in range(3, 8)]


def test_criterion_1_constant_well_resonances(record_acceptance):
    t0 = time.perf_counter()
    rs = scan_resonances(well(), (-1.0, 30.0), 0.05, psi=half_psi())
    elapsed = time.perf_counter() - t0
    root_err = np.max(np.abs(rs.alphas - WELL_ROOTS)) if len(rs) == 4 else math.inf
    theta_err = max(abs(r.theta - (-1) ** n) for n, r in enumerate(rs))
    # kappa = (-1)^n / 2 for n >= 1; at alpha = 0 the half-bound state is u = 1 and kappa = int Psi = 1
    kappa_err = max(abs(r.kappa - ((-1) ** n / 2 if n else 1.0)) for n, r in enumerate(rs))
    ok = len(rs) == 4 and root_err <= 1e-6 and theta_err <= 1e-8 and kappa_err <= 1e-8 and elapsed < 5
    record_acceptance(
        1, ok, f"{len(rs)} roots, max|alpha err|={root_err:.2e}, theta err={theta_err:.2e}, kappa err={kappa_err:.2e}, {elapsed:.2f}s"
    )
    assert ok


def test_criterion_2_delta_special_case(record_acceptance):
    t0 = time.perf_counter()
    zero, psi = ShapePotential.zero(), half_psi()
    rec = resonance_record(zero, psi, 0.0)
    lim_err = fin_err = 0.0
    for k in (0.5, 1.0, 2.0):
        exact = 4 * k * k / (4 * k * k + 4)
        lim = transmission_probability(rec, 2.0, k)
        lim_err = max(lim_err, abs(lim - exact))
        fin_err = max(fin_err, abs(scatter_finite(zero, psi, 0.0, 2.0, 1e-3, k).T2 - lim))
    elapsed = time.perf_counter() - t0
    ok = rec.theta == 1.0 and abs(rec.kappa - 1.0) <= 1e-12 and lim_err <= 1e-12 and fin_err <= 1e-3 and elapsed < 5
    record_acceptance(2, ok, f"limit |T|^2 err={lim_err:.2e}, finite eps=1e-3 err={fin_err:.2e}, {elapsed:.2f}s")
    assert ok


def test_criterion_3_non_resonant_opacity(record_acceptance):
    t0 = time.perf_counter()
    rep = scattering_convergence(well(), ShapePotential.zero(), 1.0, 0.0, 1.0)
    elapsed = time.perf_counter() - t0
    decreasing = bool(np.all(np.diff(rep.err_R) < 0) and np.all(np.diff(rep.err_T) < 0))
    ok = not rep.resonant and decreasing and 0.8 <= rep.order_R <= 1.2 and 0.8 <= rep.order_T <= 1.2 and elapsed < 10
    record_acceptance(
        3, ok, f"decreasing={decreasing}, p(|R+1|)={rep.order_R:.3f}, p(|T|)={rep.order_T:.3f}, {elapsed:.2f}s"
    )
    assert ok


def test_criterion_4_total_transparency(record_acceptance):
    t0 = time.perf_counter()
    odd_psi = ShapePotential.from_pieces([(-1.0, 1.0, [0.0, 1.0])])
    rs = scan_resonances(well(), (-1.0, 30.0), 0.05, psi=odd_psi)
    theta_dev = max(abs(abs(r.theta) - 1.0) for r in rs)
    kappa_max = max(abs(r.kappa) for r in rs)
    prob_dev = max(abs(transmission_probability(r, beta, k) - 1.0) for r in rs for beta in (-3.0, 1.0, 7.5) for k in (0.3, 1.0, 4.0))
    elapsed = time.perf_counter() - t0
    ok = len(rs) == 4 and theta_dev <= 1e-8 and kappa_max <= 1e-8 and prob_dev <= 1e-8 and elapsed < 10
    record_acceptance(
        4, ok, f"{len(rs)} records, max||theta|-1|={theta_dev:.2e}, max|kappa|={kappa_max:.2e}, max||T|^2-1|={prob_dev:.2e}, {elapsed:.2f}s"
    )
    assert ok


def test_criterion_5_k_independence(record_acceptance):
    # odd shape: the positive resonance has theta != +-1, so |T|^2 < 1 is a nontrivial value
    rs = scan_resonances(odd_phi(), (1.0, 30.0))
    rec = rs.records[0]
    values = [abs(scatter_limit(rec, 0.0, k).T) ** 2 for k in (0.5, 1.0, 2.0, 5.0)]
    spread = max(values) - min(values)
    ok = spread <= 1e-12 and values[0] < 0.99
    record_acceptance(5, ok, f"alpha={rec.alpha:.6f}, |T|^2={values[0]:.12f}, spread over k={spread:.2e}")
    assert ok


def test_criterion_6_unitarity_suite(record_acceptance):
    rng = np.random.default_rng(20261019)
    t0 = time.perf_counter()
    flux = wr = 0.0
    for _ in range(500):
        phi, psi = random_piecewise_constant(rng), random_piecewise_constant(rng)
        alpha, beta = rng.uniform(-10, 10, 2)
        eps, k = 10 ** rng.uniform(-3, 0), 10 ** rng.uniform(-1, 1)
        pair = fundamental_pair(phi, psi, alpha, beta, eps, k)
        d = scatter_finite(phi, psi, alpha, beta, eps, k)
        flux, wr = max(flux, d.flux_defect), max(wr, pair.wronskian_defect)
    elapsed = time.perf_counter() - t0
    ok = flux <= 1e-8 and wr <= 1e-8 and elapsed < 60
    record_acceptance(6, ok, f"500 cases, max flux defect={flux:.2e}, max Wronskian defect={wr:.2e}, {elapsed:.2f}s")
    assert ok


def test_criterion_7_resolvent_convergence(record_acceptance):
    t0 = time.perf_counter()
    probe = ResolventProbe(PiecewisePolynomial.constant(1.0, 1.0, 2.0), 2j)
    res = resolvent_error(well(), half_psi(), (math.pi / 2) ** 2, 1.0, RESOLVENT_EPS, probe)
    split = resolvent_error(well(), half_psi(), 1.0, 1.0, RESOLVENT_EPS, probe)
    elapsed = time.perf_counter() - t0
    res_dec = bool(np.all(np.diff(res.errors) < 0))
    split_dec = bool(np.all(np.diff(split.errors) <= 0))
    ok = (
        res.limit.kind == "resonant"
        and split.limit == LimitOperator.split()
        and res_dec
        and res.order >= 0.4
        and split_dec
        and elapsed < 180
    )
    record_acceptance(
        7,
        ok,
        f"resonant errors {res.errors[0]:.3g}->{res.errors[-1]:.3g} p={res.order:.3f}; "
        f"split errors {split.errors[0]:.3g}->{split.errors[-1]:.3g} p={split.order:.3f}; {elapsed:.1f}s",
    )
    assert ok


def test_criterion_8_oracle_equivalence(record_acceptance):
    rng = np.random.default_rng(8)
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(100):
        phi, psi = random_piecewise_constant(rng), random_piecewise_constant(rng)
        alpha, beta = rng.uniform(-10, 10, 2)
        eps, k = 10 ** rng.uniform(-3, 0), 10 ** rng.uniform(-1, 1)
        exact = fundamental_pair(phi, psi, alpha, beta, eps, k, method="exact").as_matrix()
        adaptive = fundamental_pair(phi, psi, alpha, beta, eps, k, method="rk45").as_matrix()
        worst = max(worst, float(np.max(np.abs(adaptive - exact) / np.abs(exact))))
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-9 and elapsed < 30
    record_acceptance(8, ok, f"100 cases, max relative trace difference={worst:.2e}, {elapsed:.2f}s")
    assert ok


def test_criterion_9_transmission_spikes(record_acceptance, tmp_path, capsys):
    phi_path, psi_path, out = tmp_path / "well.json", tmp_path / "psi.json", tmp_path / "sweep.csv"
    save_shape(well(), phi_path)
    save_shape(half_psi(), psi_path)
    t0 = time.perf_counter()
    code = main(
        ["sweep", "--phi", str(phi_path), "--psi", str(psi_path), "--alpha", "0:25:0.02", "--beta", "1",
         "--eps", "0.01", "--k", "1", "--out", str(out)]
    )
    elapsed = time.perf_counter() - t0
    capsys.readouterr()
    table = np.array([[float(v) for v in row] for row in list(csv.reader(io.StringIO(out.read_text())))[1:]])
    alphas, t2 = table[:, 0], table[:, 7]
    lam = scan_resonances(well(), (-1.0, 26.0)).alphas
    lam = lam[(lam >= 0) & (lam <= 25)]
    spikes = spike_locations(alphas, t2, min_height=0.1)
    near = np.array([np.min(np.abs(lam - s)) for s in spikes]) if len(spikes) else np.array([math.inf])
    covered = all(np.min(np.abs(spikes - a)) <= 0.1 for a in lam) if len(spikes) else False
    far = np.array([np.min(np.abs(lam - a)) for a in alphas]) > 0.5
    floor = float(t2[far].max())
    ok = code == 0 and len(spikes) == len(lam) and near.max() <= 0.1 and covered and floor <= 0.01 and elapsed < 60
    record_acceptance(
        9,
        ok,
        f"{len(spikes)} spikes for {len(lam)} resonances, max offset={near.max():.3f}, floor={floor:.2e}, {elapsed:.2f}s",
    )
    assert ok

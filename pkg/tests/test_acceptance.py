"""Nine headline checks, one test per criterion, numbers printed as measured.

Two of them state bounds this implementation does not meet; they are kept
at the stated tolerances instead of being widened, so they fail visibly:
criterion 2 (the closed-form error touches 5.2% at one corner of the grid)
and criterion 6 (the STA + single-theta phi-sweep design leaves the
(A_zz, a) difference direction so soft that its 1-sigma is ~1e4 MHz, far
outside the stated [0.1, 1.0] MHz box).
"""

import time

import numpy as np

from nvbeat.analytic import (
    RamseyModelParams,
    delta_perturbative,
    zq_ramsey_lambda,
    zq_ramsey_v,
)
from nvbeat.dynamics import (
    PulseParams,
    pi_pulse_from_rabi,
    propagate,
    simulate_rabi,
    simulate_zq_ramsey,
    spectrum_peaks,
)
from nvbeat.estimation import (
    FitParams,
    find_single_transition_axis,
    fit_hyperfine,
    precision_propagation,
    sensitivity_c,
    synthesize_dataset,
)
from nvbeat.spin_core import (
    FieldOrientation,
    HyperfineTensor,
    SystemParams,
    build_hamiltonian,
    eigensystem,
    zero_quantum_splitting_exact,
)
from nvbeat.tensor_geometry import principal_axes

REF = HyperfineTensor(166.9, 122.9, 90.0, -90.3)
SYS = SystemParams(tensor=REF)
TRUTH = FitParams(a_xx=166.9, a_yy=122.9, a_zz=90.0, a=-90.3, b=40.3, phi_offset=0.0)
F40 = FieldOrientation(40.3, 40.0, 90.0)


def test_acceptance_1_principal_axes():
    n = 1000
    t0 = time.perf_counter()
    for _ in range(n):
        ax = principal_axes(REF)
    per_call = (time.perf_counter() - t0) / n
    print(
        "ACCEPTANCE 1: principal values (%.4f, %.4f, %.4f), theta_p %.4f/%.4f, "
        "%.1f us per call"
        % (ax.values[0], ax.values[1], ax.values[2], ax.theta_p, ax.theta_p_alt,
           1e6 * per_call)
    )
    assert abs(ax.values[0] - 30.3) < 0.1
    assert abs(ax.values[1] - 122.9) < 0.1
    assert abs(ax.values[2] - 226.6) < 0.1
    assert abs(ax.theta_p - 56.5) < 0.1
    assert abs(ax.theta_p_alt - 123.5) < 0.1
    assert per_call < 1e-3


def test_acceptance_2_closed_form_vs_exact():
    base = dict(a_xx=200.0, a_yy=120.0, a_zz=130.0)
    worst = 0.0
    worst_at = None
    t0 = time.perf_counter()
    for a in (0.0, 50.0, 100.0):
        params = SystemParams(tensor=HyperfineTensor(a=a, **base))
        for b in np.arange(5.0, 50.0 + 1e-9, 5.0):
            for theta in (20.0, 40.0, 60.0, 90.0):
                for phi in (0.0, 45.0, 90.0):
                    field = FieldOrientation(float(b), theta, phi)
                    exact = zero_quantum_splitting_exact(
                        eigensystem(build_hamiltonian(params, field))
                    )
                    pert = delta_perturbative(params, field)
                    rel = abs(pert - exact) / exact
                    if rel > worst:
                        worst, worst_at = rel, (a, float(b), theta, phi)
    elapsed = time.perf_counter() - t0
    print(
        "ACCEPTANCE 2: worst closed-form error %.3f%% at (a=%g, B=%g, theta=%g, "
        "phi=%g), grid in %.2f s" % (100 * worst, *worst_at, elapsed)
    )
    assert elapsed < 5.0
    assert worst < 0.05


def test_acceptance_3_zq_anchor_and_detuning():
    tau = np.linspace(0.0, 20.0, 2048)
    bin_width = 1.0 / 20.0
    doms = {}
    for det in (0.0, 5.0, 10.0):
        trace = simulate_zq_ramsey(SYS, F40, 0.025, det, tau, rabi_amplitude=20.0)
        doms[det] = spectrum_peaks(trace).frequency[0]
    print(
        "ACCEPTANCE 3: ZQ peak %.4f MHz; detuned 5/10 MHz peaks %.4f/%.4f "
        "(bin %.3f MHz)" % (doms[0.0], doms[5.0], doms[10.0], bin_width)
    )
    assert abs(doms[0.0] - 6.2) < 0.5
    assert abs(doms[5.0] - doms[0.0]) < bin_width
    assert abs(doms[10.0] - doms[0.0]) < bin_width


def test_acceptance_4_single_transition_axis():
    theta, phi, ratio = find_single_transition_axis(SYS, 40.3)
    sta = FieldOrientation(40.3, theta, phi)
    delta = zero_quantum_splitting_exact(eigensystem(build_hamiltonian(SYS, sta)))
    t_pi = pi_pulse_from_rabi(
        simulate_rabi(SYS, sta, PulseParams(14.3), np.linspace(0.0, 2.0 / 14.3, 801))
    )
    # beat amplitude = the signal component at the ZQ splitting, read by a
    # lock-in over an integer number of beat periods
    grid = np.linspace(0.0, 20.0 / delta, 2001)[:-1]
    trace = simulate_zq_ramsey(SYS, sta, t_pi, 0.0, grid, rabi_amplitude=14.3)
    s = trace.signal
    beat = abs(2.0 * np.mean((s - s.mean()) * np.exp(-2j * np.pi * delta * grid)))
    print(
        "ACCEPTANCE 4: axis theta %.4f deg, phi %.2e deg, amplitude ratio %.2e, "
        "beat amplitude %.2e" % (theta, phi, ratio, beat)
    )
    assert abs(theta - 5.1) < 0.5
    assert abs(phi) < 0.01
    assert beat < 0.02


def test_acceptance_5_lambda_v_relation():
    from nvbeat.spin_core import lambda_transition_amplitudes

    tau = np.linspace(0.0, 5.0, 512)
    eig = eigensystem(build_hamiltonian(SYS, F40))
    op, om = lambda_transition_amplitudes(eig, REF, F40)
    model = RamseyModelParams(op, om, zero_quantum_splitting_exact(eig))
    sim = simulate_zq_ramsey(SYS, F40, 0.035, 0.0, tau, ideal_pulses=True)
    pv = zq_ramsey_v(model, tau)
    worst = float(np.max(np.abs(sim.signal - (0.5 + 0.5 * pv))))

    one_period = np.linspace(0.0, 1.0, 4001)
    amps = []
    for n in (1, 2, 3):
        p = zq_ramsey_lambda(RamseyModelParams(1.0, 1.0, 1.0, n_spins=n), one_period)
        amps.append((p.max() - p.min()) / 2.0)
    print(
        "ACCEPTANCE 5: |p_sim - (1/2 + p_V/2)| worst %.4f; N-spin amplitudes %s"
        % (worst, ["%.6f" % a for a in amps])
    )
    assert worst < 0.05
    for n, amp in zip((1, 2, 3), amps):
        assert abs(amp * 2.0**n - 0.5) < 1e-12


def test_acceptance_6_round_trip_fit():
    theta, phi, _ = find_single_transition_axis(SYS, 40.3)
    design = [(theta, phi, "sq_frequency")]
    for p in np.linspace(-90.0, 90.0, 19):
        design.append((40.0, float(p), "zq_frequency"))

    t0 = time.perf_counter()
    ds0 = synthesize_dataset(SYS, b=40.3, design=design, noise_sigma=None, seed=0)
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(5):
        fac = 1.0 + 0.2 * rng.choice([-1.0, 1.0], size=4)
        start = FitParams(
            TRUTH.a_xx * fac[0], TRUTH.a_yy * fac[1], TRUTH.a_zz * fac[2],
            TRUTH.a * fac[3], 40.3, 0.0,
        )
        r = fit_hyperfine(ds0, start)
        err = max(
            abs(getattr(r.params, n) - getattr(TRUTH, n))
            for n in ("a_xx", "a_yy", "a_zz", "a")
        )
        worst = max(worst, err)

    noise = {"sq_frequency": 0.2, "zq_frequency": 0.2}
    rec = {"a_zz": [], "a": []}
    rep = {"a_zz": [], "a": []}
    for s in range(100):
        dsn = synthesize_dataset(SYS, b=40.3, design=design, noise_sigma=noise, seed=100 + s)
        r = fit_hyperfine(dsn, TRUTH)
        for n in rec:
            rec[n].append(getattr(r.params, n))
            rep[n].append(r.sigmas[n])
    elapsed = time.perf_counter() - t0
    mean_rep = {n: float(np.mean(rep[n])) for n in rep}
    scatter = {n: float(np.std(rec[n])) for n in rec}
    print(
        "ACCEPTANCE 6: noiseless worst %.2e MHz; reported sigma a_zz %.4g, a %.4g; "
        "empirical scatter a_zz %.4g, a %.4g; %.1f s"
        % (worst, mean_rep["a_zz"], mean_rep["a"], scatter["a_zz"], scatter["a"], elapsed)
    )
    assert elapsed < 60.0
    assert worst < 0.01
    for n in ("a_zz", "a"):
        assert 0.1 <= mean_rep[n] <= 1.0, (
            "reported sigma for %s is %.4g MHz, outside [0.1, 1.0]" % (n, mean_rep[n])
        )
        assert scatter[n] <= 1.5 * mean_rep[n] and scatter[n] >= mean_rep[n] / 1.5


def test_acceptance_7_sensitivity():
    sta = FieldOrientation(40.3, 5.008965663741781, 0.0)
    c = {w: sensitivity_c(SYS, sta, w).c_value for w in ("a_xx", "a_yy", "a_zz", "a")}
    p_zz = precision_propagation(0.2, 0.35)
    p_xx = precision_propagation(0.2, 0.045)
    print(
        "ACCEPTANCE 7: c values a_xx %.4f, a_yy %.4f, a_zz %.4f, a %.4f; "
        "propagated 0.2 MHz -> %.3f and %.2f MHz" % (
            c["a_xx"], c["a_yy"], c["a_zz"], c["a"], p_zz, p_xx)
    )
    assert 0.25 <= c["a_zz"] <= 0.45
    assert 0.02 <= c["a_xx"] <= 0.07
    assert 0.015 <= c["a_yy"] <= 0.05
    assert abs(p_zz - 0.6) < 0.2 * 0.6
    assert abs(p_xx - 5.0) < 0.2 * 5.0


def test_acceptance_8_rabi_behavior():
    from scipy.optimize import curve_fit

    theta, phi, _ = find_single_transition_axis(SYS, 40.3)
    sta = FieldOrientation(40.3, theta, phi)
    t = np.linspace(0.0, 4.0 / 14.3, 1024)
    tr_sta = simulate_rabi(SYS, sta, PulseParams(14.3), t)
    pk_sta = spectrum_peaks(tr_sta)

    def sinus(tt, a, f, ph, c):
        return a * np.cos(2 * np.pi * f * tt + ph) + c

    popt, _ = curve_fit(sinus, t, tr_sta.signal, p0=[0.25, pk_sta.frequency[0], 0.0, 0.75])
    rms = float(np.sqrt(np.mean((tr_sta.signal - sinus(t, *popt)) ** 2)))
    contrast = float(tr_sta.signal.max() - tr_sta.signal.min())

    t_long = np.linspace(0.0, 1.0, 2048)
    tr_off = simulate_rabi(SYS, F40, PulseParams(14.3), t_long)
    pk_off = spectrum_peaks(tr_off)
    n_big = int(np.sum(pk_off.magnitude > 0.10 * pk_off.magnitude.max()))

    m_sta = pi_pulse_from_rabi(simulate_rabi(SYS, sta, PulseParams(14.3), t_long))
    m_off = pi_pulse_from_rabi(tr_off)
    print(
        "ACCEPTANCE 8: STA peak %.4f MHz, residual %.2f%% of contrast; off-axis "
        "peaks >10%%: %d; first minima %.5f/%.5f us (%.1f%% apart)"
        % (pk_sta.frequency[0], 100 * rms / contrast, n_big, m_sta, m_off,
           100 * abs(m_off - m_sta) / m_sta)
    )
    assert abs(pk_sta.frequency[0] - 14.3) < 0.2
    assert rms < 0.03 * contrast
    assert n_big >= 2
    assert abs(m_off - m_sta) / m_sta < 0.10


def test_acceptance_9_property_suite():
    t0 = time.perf_counter()
    rng = np.random.default_rng(41)

    for _ in range(200):
        tensor = HyperfineTensor(*(float(x) for x in rng.uniform(-200, 200, size=4)))
        params = SystemParams(tensor=tensor)
        field = FieldOrientation(
            float(rng.uniform(1, 60)), float(rng.uniform(0, 180)),
            float(rng.uniform(0, 360)),
        )
        h = build_hamiltonian(params, field)
        assert np.max(np.abs(h - h.conj().T)) < 1e-12
        assert abs(np.trace(h).real - 4.0 * params.d) < 1e-9 * params.d
        mirror = np.linalg.eigvalsh(
            build_hamiltonian(params, FieldOrientation(field.b, field.theta, -field.phi))
        )
        assert np.max(np.abs(np.linalg.eigvalsh(h) - mirror)) < 1e-9

    for _ in range(10):
        m = rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6))
        hermitian = (m + m.conj().T) / 2
        psi0 = rng.normal(size=6) + 1j * rng.normal(size=6)
        psi0 /= np.linalg.norm(psi0)
        assert abs(np.linalg.norm(propagate([(hermitian, 0.4)], psi0)) - 1.0) < 1e-9

    from nvbeat.analytic import bright_dark
    from nvbeat.dynamics import rotating_frame_h

    for _ in range(5):
        op, om = rng.uniform(0.2, 2.0, size=2)
        dec = bright_dark(float(op), float(om))
        h3 = rotating_frame_h(float(rng.uniform(-4, 4)), 0.0, float(op), float(om))
        psi = propagate([(h3, 0.9)], dec.dark)
        assert abs(abs(np.vdot(dec.dark, psi)) - 1.0) < 1e-9

    tau = np.linspace(0.0, 6.0, 128)
    for theta in (15.0, 55.0):
        trace = simulate_zq_ramsey(SYS, FieldOrientation(40.3, theta, 30.0), 0.035, 0.0, tau)
        assert np.all(trace.signal >= -1e-9) and np.all(trace.signal <= 1 + 1e-9)

    design = [(40.0, float(p), "zq_frequency") for p in np.linspace(-90, 90, 7)]
    kw = dict(noise_sigma={"zq_frequency": 0.3}, field_imperfection=(0.8, 120.0, 45.0), seed=17)
    d1 = synthesize_dataset(SYS, b=40.3, design=design, **kw)
    d2 = synthesize_dataset(SYS, b=40.3, design=design, **kw)
    assert [p.value for p in d1.points] == [p.value for p in d2.points]

    elapsed = time.perf_counter() - t0
    print("ACCEPTANCE 9: property suite clean in %.1f s" % elapsed)
    assert elapsed < 30.0

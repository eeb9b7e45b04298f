"""Simulator semantics: gates, measurement, reset, classical modes, noise,
determinism, and record serialization."""

import io
import math
import random
from dataclasses import replace

import numpy as np
import pytest
from scipy.stats import chi2

import oracles
from hybridsim import hir, sim
from hybridsim import fixedpoint as fx
from hybridsim.algorithms import build_active_reset, build_rwpe, build_teleport
from hybridsim.errors import (BadQubitIndex, DivideByZero, ShotError,
                              StepLimitExceeded)
from hybridsim.sim import ClassicalMode, ExecConfig, NoiseModel, QuantumState

FIXED = ClassicalMode.FIXED_POINT


# -- QuantumState unit behavior ------------------------------------------------

def test_h_on_zero():
    s = QuantumState(1)
    s.apply_gate("h", [0])
    r = 1 / math.sqrt(2)
    assert s.amps == pytest.approx([r, r])


def test_eswap_pi_examples():
    s = QuantumState(2)
    s.apply_gate("x", [1])                     # |01>
    s.apply_gate("eswap", [0, 1], math.pi)
    assert s.amps[2] == pytest.approx(-1j)     # -i |10>
    assert sum(abs(a) for i, a in enumerate(s.amps) if i != 2) < 1e-12

    s = QuantumState(2)                        # |00>
    s.apply_gate("eswap", [0, 1], math.pi)
    assert s.amps[0] == pytest.approx(np.exp(-1j * math.pi / 2))


def test_eswap_matches_oracle_random_angles():
    rng = random.Random(5)
    for _ in range(25):
        theta = rng.uniform(-2 * math.pi, 2 * math.pi)
        s = QuantumState(2)
        for q in (0, 1):
            s.apply_gate("h", [q])
            s.apply_gate("rz", [q], rng.uniform(0, math.pi))
        before = np.array(s.amps)
        s.apply_gate("eswap", [0, 1], theta)
        assert np.allclose(s.amps, oracles.eswap(theta) @ before, atol=1e-12)


def test_gate_dispatch_matches_oracle():
    rng = random.Random(6)
    for name in ("h", "x", "sx", "rz", "crz", "eswap", "cnot"):
        n = 3
        s = QuantumState(n)
        for q in range(n):
            s.apply_gate("h", [q])
            s.apply_gate("rz", [q], rng.uniform(0, 2))
        before = np.array(s.amps)
        arity = hir.GATE_ARITY[name]
        qubits = rng.sample(range(n), arity)
        theta = rng.uniform(-3, 3) if name in ("rz", "crz", "eswap") else None
        s.apply_gate(name, qubits, theta)
        U = oracles.embed(oracles.GATES[name](theta), qubits, n)
        assert np.allclose(s.amps, U @ before, atol=1e-12)


def test_bad_qubit_index():
    s = QuantumState(2)
    with pytest.raises(BadQubitIndex):
        s.apply_gate("h", [2])
    with pytest.raises(BadQubitIndex):
        s.apply_gate("cnot", [1, 1])


def test_measure_deterministic_one():
    s = QuantumState(1)
    s.apply_gate("x", [0])
    assert s.measure(0, random.Random(0)) == 1
    assert s.amps[1] == pytest.approx(1.0)


def test_measure_collapse_and_renormalize():
    s = QuantumState(2)
    s.apply_gate("h", [0])
    s.apply_gate("cnot", [0, 1])
    b = s.measure(0, random.Random(3))
    expect = [0j] * 4
    expect[3 if b else 0] = 1 + 0j
    assert np.allclose(s.amps, expect, atol=1e-12)
    assert s.norm_sq() == pytest.approx(1.0, abs=1e-10)


def test_measure_frequency_half():
    counts = 0
    n = 10 ** 5
    rng = random.Random(99)
    for _ in range(n):
        s = QuantumState(1)
        s.apply_gate("h", [0])
        counts += s.measure(0, rng)
    assert abs(counts / n - 0.5) < 5e-3


def test_reset_examples():
    rng = random.Random(1)
    s = QuantumState(1)
    s.apply_gate("x", [0])
    s.reset(0, rng)
    assert s.amps[0] == pytest.approx(1.0)

    s = QuantumState(1)
    s.apply_gate("h", [0])
    s.reset(0, rng)
    assert abs(s.amps[0]) == pytest.approx(1.0)


def test_reset_preserves_unentangled_partner():
    rng = random.Random(2)
    s = QuantumState(2)
    s.apply_gate("sx", [1])
    s.apply_gate("rz", [1], 0.8)
    before = oracles.reduced_density(s.amps, 2, [1])
    s.apply_gate("h", [0])
    s.reset(0, rng)
    after = oracles.reduced_density(s.amps, 2, [1])
    assert np.allclose(before, after, atol=1e-10)


# -- classical single-step semantics -------------------------------------------

def test_step_classical_fixed_vs_real():
    regs = sim.RegisterFile({"a": "fixed", "b": "fixed", "c": "fixed"},
                            {"a": fx.FixedQ216.from_real(1.5),
                             "b": fx.FixedQ216.from_real(1.5),
                             "c": fx.FixedQ216(0)})
    out = sim.step_classical(hir.Classical("mul", "c", ("a", "b")), regs, FIXED)
    assert out.values["c"].value == -1.75

    regs = sim.RegisterFile({"a": "fixed", "b": "fixed", "c": "fixed"},
                            {"a": 1.5, "b": 1.5, "c": 0.0})
    out = sim.step_classical(hir.Classical("mul", "c", ("a", "b")), regs,
                             ClassicalMode.EXACT_REAL)
    assert out.values["c"] == 2.25


def test_step_classical_cmp_and_select():
    regs = sim.RegisterFile({"d": "bit", "r": "bit", "x": "fixed"},
                            {"d": 0, "r": 0, "x": 0.25})
    out = sim.step_classical(hir.Classical("cmp_eq", "r", ("d", 0)), regs,
                             ClassicalMode.EXACT_REAL)
    assert out.values["r"] == 1
    regs = sim.RegisterFile({"c": "bit", "x": "fixed"}, {"c": 1, "x": 0.0})
    out = sim.step_classical(hir.Classical("select", "x", ("c", 0.5, -0.5)),
                             regs, ClassicalMode.EXACT_REAL)
    assert out.values["x"] == 0.5


def test_step_classical_divide_by_zero():
    regs = sim.RegisterFile({"a": "fixed", "b": "fixed"}, {"a": 0.0, "b": 1.0})
    with pytest.raises(DivideByZero):
        sim.step_classical(hir.Classical("recip", "b", ("a",)), regs,
                           ClassicalMode.EXACT_REAL)


# -- whole-shot behavior --------------------------------------------------------

def _prepend_entry(prog, instrs):
    """New first block running `instrs` once, then jumping to the old entry
    (prepending into the entry block itself would re-run the prep whenever
    the entry is also a loop head)."""
    proc = prog.entry_procedure()
    prep = hir.BasicBlock("test_prep", tuple(instrs),
                          hir.Br(proc.blocks[0].label))
    return hir.HybridProgram(
        (hir.Procedure(proc.name, proc.qubits, proc.params, proc.decls,
                       (prep,) + proc.blocks),), prog.entry)


def _random_prep(rng):
    """A 1-qubit prep sequence from the native set plus the state it makes."""
    angles = [rng.uniform(-2, 2) for _ in range(3)]
    instrs = (hir.Gate("rz", (0,), angles[0]), hir.Gate("h", (0,)),
              hir.Gate("rz", (0,), angles[1]), hir.Gate("h", (0,)),
              hir.Gate("rz", (0,), angles[2]))
    psi = np.array([1, 0], dtype=complex)
    for a in angles[:1]:
        psi = oracles.rz(a * math.pi) @ psi
    psi = oracles.H @ psi
    psi = oracles.rz(angles[1] * math.pi) @ psi
    psi = oracles.H @ psi
    psi = oracles.rz(angles[2] * math.pi) @ psi
    return instrs, psi


def test_teleport_all_branches_ideal():
    prog = build_teleport()
    seen = set()
    rng = random.Random(17)
    for trial in range(40):
        instrs, psi = _random_prep(rng)
        record, state, _ = sim.run_shot_debug(
            _prepend_entry(prog, instrs), ExecConfig(seed=trial), 0)
        bits = dict(record.outputs)
        seen.add((bits["mx"], bits["mzv"]))
        rho = oracles.reduced_density(state.amps, 3, [2])
        fidelity = float(np.real(psi.conj() @ rho @ psi))
        assert fidelity > 1 - 1e-10
    assert seen == {(0, 0), (0, 1), (1, 0), (1, 1)}


def test_teleport_basis_inputs():
    prog = build_teleport()
    for prep, expect_index in ((None, 0), (hir.Gate("x", (0,)), 1)):
        p = _prepend_entry(prog, (prep,)) if prep else prog
        _, state, _ = sim.run_shot_debug(p, ExecConfig(seed=5), 0)
        rho = oracles.reduced_density(state.amps, 3, [2])
        assert rho[expect_index, expect_index] == pytest.approx(1.0, abs=1e-10)


def _instrumented_reset():
    """Active-reset program that also outputs the loop counter."""
    prog = build_active_reset()
    proc = prog.entry_procedure()
    blocks = []
    for b in proc.blocks:
        if isinstance(b.terminator, hir.Ret):
            blocks.append(hir.BasicBlock(
                b.label, b.instructions + (hir.Output("counter"),),
                b.terminator))
        else:
            blocks.append(b)
    return hir.HybridProgram(
        (hir.Procedure(proc.name, proc.qubits, proc.params, proc.decls,
                       tuple(blocks)),), prog.entry)


def test_active_reset_trace_from_zero():
    # ideal from |0>: success after exactly 2 measurements
    record = sim.run_shot(_instrumented_reset(), ExecConfig(seed=3), 0)
    out = dict(record.outputs)
    assert out["ok"] == 1
    assert out["counter"] == 1          # exits during the second pass


def test_active_reset_trace_from_one():
    # from |1>: 1 -> flip -> 0, 0: success after exactly 3 measurements
    prog = _prepend_entry(_instrumented_reset(), (hir.Gate("x", (0,)),))
    record = sim.run_shot(prog, ExecConfig(seed=3), 0)
    out = dict(record.outputs)
    assert out["ok"] == 1
    assert out["counter"] == 2


def test_active_reset_success_vs_enumeration():
    for r in (0.0, 0.2):
        cfg = ExecConfig(seed=8, shots=20000,
                         noise=NoiseModel(p_gate1=0, p_gate2=0, p_readout=r))
        records = sim.run_shots(build_active_reset(), cfg)
        rate = sum(v for rec in records for k, v in rec.outputs if k == "ok") \
            / len(records)
        expect = oracles.active_reset_success_prob(r)
        assert abs(rate - expect) <= oracles.binom_3sigma(expect, len(records))


def test_shot_determinism_and_order_independence():
    prog = build_rwpe()
    cfg = ExecConfig(seed=42, shots=20)
    a = sim.run_shots(prog, cfg)
    b = sim.run_shots(prog, cfg)
    assert a == b
    shuffled_indices = list(range(20))
    random.Random(0).shuffle(shuffled_indices)
    c = sim.run_shots(prog, cfg, shot_indices=shuffled_indices)
    assert sorted(c, key=lambda r: r.shot) == a
    assert sim.run_shots(prog, replace(cfg, shots=1)) == [sim.run_shot(prog, cfg, 0)]


def test_fixed_point_rwpe_completes_with_wrap():
    cfg = ExecConfig(classical_mode=FIXED, seed=11, shots=3)
    for rec in sim.run_shots(build_rwpe(), cfg):
        assert rec.iteration_count == 24
        # evolution times really did wrap at some point
        assert any(t.value < 0 for t, _, _ in rec.evidence)


def test_classical_mode_agreement_in_range():
    """With sigma kept >= 0.5 the evolution time never wraps, and both
    register models follow the same trajectory to quantization accuracy."""
    from hybridsim.algorithms import RwpeParams, build_rwpe as build
    prog = build(RwpeParams(mu0=0.7951, sigma0=1.3, n_iter=5))
    matched = 0
    for seed in range(10):
        real = sim.run_shot(prog, ExecConfig(seed=seed), 0)
        fixed = sim.run_shot(prog, ExecConfig(seed=seed, classical_mode=FIXED), 0)
        if [d for *_, d in real.evidence] != [d for *_, d in fixed.evidence]:
            continue    # a borderline draw flipped one outcome; skip
        matched += 1
        for (t_r, p_r, _), (t_f, p_f, _) in zip(real.evidence, fixed.evidence):
            assert abs(t_r - t_f.value) < 2 ** -12
            assert abs(p_r - p_f.value) < 2 ** -12
        mu_r = dict(real.outputs)["mu"]
        mu_f = dict(fixed.outputs)["mu"].value
        assert abs(mu_r - mu_f) < 2 ** -12
    assert matched >= 8


def test_step_limit_exceeded():
    prog = hir.parse("proc main qubits 0\nloop:\n  br loop\nendproc\n")
    with pytest.raises(ShotError) as err:
        sim.run_shot(prog, ExecConfig(seed=0, step_limit=100), 0)
    assert isinstance(err.value.cause, StepLimitExceeded)
    assert err.value.shot_index == 0


def test_divide_by_zero_carries_shot_index():
    prog = hir.parse("""proc main qubits 0
  var fixed a = 0.0
  var fixed b = 0.0
entry:
  recip b, a
  ret
endproc
""")
    with pytest.raises(ShotError) as err:
        sim.run_shots(prog, ExecConfig(seed=0, shots=3))
    assert err.value.shot_index == 0
    assert isinstance(err.value.cause, DivideByZero)


# -- noise ---------------------------------------------------------------------

def test_noise_p_zero_leaves_state_unchanged():
    prog = hir.parse("proc main qubits 2\nentry:\n  x q0\n  h q1\n"
                     "  eswap(0.3) q0, q1\n  ret\nendproc\n")
    offable = NoiseModel(p_gate1=0.0, p_gate2=0.0, p_readout=0.0)
    _, noisy, _ = sim.run_shot_debug(prog, ExecConfig(seed=5, noise=offable), 0)
    _, ideal, _ = sim.run_shot_debug(prog, ExecConfig(seed=5), 0)
    assert noisy.amps == ideal.amps


def test_noise_pauli_frequencies():
    prog = hir.parse("proc main qubits 1\nentry:\n  x q0\n  ret\nendproc\n")
    cfg = ExecConfig(seed=13, noise=NoiseModel(p_gate1=1.0, p_readout=0.0))
    compiled = sim.compile_program(prog, cfg)
    targets = {
        "x": oracles.X @ np.array([0, 1]),
        "y": oracles.Y @ np.array([0, 1]),
        "z": oracles.Z @ np.array([0, 1]),
    }
    counts = {k: 0 for k in targets}
    n = 30000
    for i in range(n):
        _, ctx = compiled.run_with_ctx(13, i, 10 ** 6)
        amps = np.array(ctx.state.amps)
        for k, vec in targets.items():
            if np.allclose(amps, vec, atol=1e-12):
                counts[k] += 1
                break
        else:
            pytest.fail("state is not a Pauli image of |1>")
    for k in targets:
        assert abs(counts[k] / n - 1 / 3) <= oracles.binom_3sigma(1 / 3, n)


def test_apply_noise_surface():
    rng = random.Random(0)
    s = QuantumState(1)
    sim.apply_noise(s, "h", (0,), rng,
                    NoiseModel(p_gate1=0.0, p_gate2=0.0, p_readout=0.0))
    assert s.amps == [1 + 0j, 0j]          # p = 0 leaves the state alone
    sim.apply_noise(s, "rz", (0,), rng, NoiseModel(p_gate1=1.0))
    assert s.amps == [1 + 0j, 0j]          # rz exempt even at p = 1
    s2 = QuantumState(2)
    sim.apply_noise(s2, "eswap", (0, 1), rng, NoiseModel(p_gate2=1.0))
    assert s2.amps != QuantumState(2).amps  # some Pauli landed


def test_measure_surface_readout_flip():
    s = QuantumState(1)
    bit = sim.measure(s, 0, random.Random(1),
                      NoiseModel(p_gate1=0, p_gate2=0, p_readout=1.0))
    assert bit == 1                         # reported flip
    assert s.amps[0] == pytest.approx(1.0)  # collapse followed the truth


def test_readout_flip_forced():
    prog = hir.parse("proc main qubits 1\n  var bit d = 0\nentry:\n"
                     "  mz q0 -> d\n  output d\n  ret\nendproc\n")
    cfg = ExecConfig(seed=0, noise=NoiseModel(p_gate1=0, p_gate2=0,
                                              p_readout=1.0))
    record, state, _ = sim.run_shot_debug(prog, cfg, 0)
    assert dict(record.outputs)["d"] == 1        # reported bit flipped
    assert state.amps[0] == pytest.approx(1.0)   # state followed the true bit


def test_rz_is_noise_exempt():
    body = "".join("  rz(0.37) q0\n" for _ in range(50))
    prog = hir.parse("proc main qubits 1\n  var bit d = 0\nentry:\n"
                     + body + "  mz q0 -> d\n  output d\n  ret\nendproc\n")
    cfg = ExecConfig(seed=1, shots=200,
                     noise=NoiseModel(p_gate1=1.0, p_readout=0.0))
    for rec in sim.run_shots(prog, cfg):
        assert dict(rec.outputs)["d"] == 0


def test_noise_model_validation():
    with pytest.raises(ValueError):
        NoiseModel(p_gate1=1.5)
    with pytest.raises(ValueError):
        NoiseModel(p_rz=0.1)
    with pytest.raises(ValueError):
        ExecConfig(shots=0)


# -- aggregate statistics --------------------------------------------------------

def _measure_all(name_lines, n):
    decls = "".join(f"  var bit d{q} = 0\n" for q in range(n))
    meas = "".join(f"  mz q{q} -> d{q}\n" for q in range(n))
    outs = "".join(f"  output d{q}\n" for q in range(n))
    return hir.parse(f"proc main qubits {n}\n{decls}entry:\n"
                     + "".join(f"  {l}\n" for l in name_lines)
                     + meas + outs + "  ret\nendproc\n")


@pytest.mark.parametrize("lines,n", [
    (["h q0"], 1),
    (["h q0", "cnot q0, q1"], 2),
    (["h q0", "sx q1", "rz(0.31) q1", "eswap(0.4) q0, q1",
      "crz(0.8) q1, q2", "h q2"], 3),
])
def test_measurement_statistics_chi2(lines, n):
    prog = _measure_all(lines, n)
    gates = [i for i in prog.entry_procedure().blocks[0].instructions
             if isinstance(i, hir.Gate)]
    U = oracles.unitary_of_gates(gates, n)
    probs = oracles.born_probs(U[:, 0])
    shots = 10 ** 5
    counts = np.zeros(1 << n)
    for rec in sim.run_shots(prog, ExecConfig(seed=21, shots=shots)):
        bits = dict(rec.outputs)
        idx = 0
        for q in range(n):
            idx = (idx << 1) | bits[f"d{q}"]
        counts[idx] += 1
    live = probs > 1e-12
    assert counts[~live].sum() == 0
    expected = probs[live] * shots
    stat = float(np.sum((counts[live] - expected) ** 2 / expected))
    assert stat < chi2.ppf(0.999, df=live.sum() - 1)


def test_mid_circuit_measurement_commutes_with_disjoint_ops():
    text_a = """proc main qubits 2
  var bit a = 0
  var bit b = 0
entry:
  h q0
  mz q0 -> a
  sx q1
  rz(0.7) q1
  h q1
  mz q1 -> b
  output a
  output b
  ret
endproc
"""
    text_b = """proc main qubits 2
  var bit a = 0
  var bit b = 0
entry:
  h q0
  sx q1
  rz(0.7) q1
  h q1
  mz q0 -> a
  mz q1 -> b
  output a
  output b
  ret
endproc
"""
    n = 20000
    freq = []
    for text in (text_a, text_b):
        prog = hir.parse(text)
        f = np.zeros(4)
        for rec in sim.run_shots(prog, ExecConfig(seed=31, shots=n)):
            bits = dict(rec.outputs)
            f[(bits["a"] << 1) | bits["b"]] += 1
        freq.append(f / n)
    for pa, pb in zip(*freq):
        se = math.sqrt(max(pa * (1 - pa), 1e-9) * 2 / n)
        assert abs(pa - pb) <= 4 * se


def test_normalization_invariant_during_run():
    prog = build_rwpe()
    _, state, _ = sim.run_shot_debug(prog, ExecConfig(seed=2), 0)
    assert state.norm_sq() == pytest.approx(1.0, abs=1e-10)
    _, state, _ = sim.run_shot_debug(
        prog, ExecConfig(seed=2, classical_mode=FIXED, noise=NoiseModel()), 0)
    assert state.norm_sq() == pytest.approx(1.0, abs=1e-10)


def test_active_reset_instruction_resets_all():
    prog = hir.parse("""proc main qubits 2
entry:
  h q0
  x q1
  active_reset
  ret
endproc
""")
    _, state, _ = sim.run_shot_debug(prog, ExecConfig(seed=9), 0)
    assert abs(state.amps[0]) == pytest.approx(1.0, abs=1e-12)


# -- record serialization ---------------------------------------------------------

def test_jsonl_roundtrip_both_modes():
    prog = build_rwpe()
    for mode in (ClassicalMode.EXACT_REAL, FIXED):
        records = sim.run_shots(prog, ExecConfig(seed=6, shots=4,
                                                 classical_mode=mode))
        buf = io.StringIO()
        sim.write_records(records, buf)
        buf.seek(0)
        assert sim.read_records(buf) == records


def test_jsonl_fixed_values_carry_raw_and_decimal():
    records = sim.run_shots(build_rwpe(),
                            ExecConfig(seed=6, shots=1, classical_mode=FIXED))
    payload = sim.record_to_json(records[0])
    mu = payload["outputs"][0][1]
    assert set(mu) == {"raw", "value"}
    assert mu["value"] == mu["raw"] / 65536
    ev = payload["evidence"][0]
    assert set(ev) == {"t", "phi_inv", "d"}

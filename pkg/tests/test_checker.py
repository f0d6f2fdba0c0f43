import pytest

from scmc import (
    CheckAutomaton,
    ConstrainAutomaton,
    InternalEvent,
    MemoryEvent,
    Params,
    ParameterError,
    PreconditionError,
    Run,
    accepts,
    build_constraint_graph,
    check_all_k,
    check_sc_oracle,
    explore_protocol,
    extract_cycle,
    make_protocol,
    model_check,
    project_trace,
    replay,
    validate_assumptions,
    verify_nice_cycle,
)
from scmc.checker import COUNTEREXAMPLE, INCONCLUSIVE, NO_VIOLATION
from fixtures import HallucinatingReadProtocol, PrivilegedWriterProtocol

W = lambda p, l, d: MemoryEvent("W", p, l, d)
R = lambda p, l, d: MemoryEvent("R", p, l, d)
ACKX = lambda i, j: InternalEvent("ACKX", (i, j))
ACKS = lambda i, j: InternalEvent("ACKS", (i, j))
UPD = lambda i: InternalEvent("UPD", (i,))

RUN12 = Run(
    (
        ACKX(2, 2), UPD(2), ACKS(1, 2), ACKX(2, 2), ACKX(1, 1), UPD(1), UPD(1),
        W(1, 1, 1), R(1, 2, 0), UPD(2), W(2, 2, 1), R(2, 1, 0),
    ),
    Params(2, 2, 1),
)


def assert_valid_counterexample(protocol, verdict):
    assert verdict.result == COUNTEREXAMPLE
    k = verdict.k
    replay(protocol, verdict.run, verdict.initial_state)
    proj = project_trace(verdict.run)
    for j in range(1, protocol.m + 1):
        assert accepts(proj, ConstrainAutomaton(j, k))
    for i in range(1, k + 1):
        assert accepts(proj, CheckAutomaton(i, k))
    cycle = verdict.cycle
    assert cycle.canonical and cycle.k == k
    graph = build_constraint_graph(verdict.trace)
    assert verify_nice_cycle(graph, cycle)
    if len(verdict.trace) <= 10:
        assert check_sc_oracle(verdict.trace) is None


class TestModelCheck:
    def test_buggy_k2_counterexample(self):
        p = make_protocol("piranha-buggy", 2, 2, 3)
        v = model_check(p, 2)
        assert_valid_counterexample(p, v)
        # BFS with the fixed event order lands on the shortest product run
        assert v.max_depth == 12
        assert v.run == Run(RUN12.events, Params(2, 2, 2))
        assert v.initial_state.owner == (1, 1)
        assert v.cycle.vertices == (1, 2, 3, 4)
        assert v.trace.events == (W(1, 1, 1), R(1, 2, 0), W(2, 2, 1), R(2, 1, 0))

    def test_correct_no_violation(self):
        p = make_protocol("piranha", 2, 2, 1)
        for k in (1, 2):
            v = model_check(p, k)
            assert v.result == NO_VIOLATION
            assert v.states > 0 and v.transitions > 0

    def test_state_count_sanity(self):
        p = make_protocol("piranha", 2, 2, 1)
        protocol_states, _ = explore_protocol(p)
        for k in (1, 2):
            v = model_check(p, k)
            assert v.states <= protocol_states * (2 ** k) * (3 ** k)

    def test_deterministic(self):
        p = make_protocol("piranha-buggy", 2, 2, 2)
        assert model_check(p, 2) == model_check(p, 2)

    def test_threads_same_verdict(self):
        p = make_protocol("piranha-buggy", 2, 2, 2)
        serial = model_check(p, 2)
        parallel = model_check(p, 2, threads=4)
        assert parallel.result == serial.result
        assert_valid_counterexample(p, parallel)
        assert parallel == serial

    def test_threads_no_violation(self):
        p = make_protocol("piranha", 2, 2, 1)
        serial = model_check(p, 2)
        parallel = model_check(p, 2, threads=3)
        assert (serial.result, serial.states, serial.transitions) == (
            parallel.result,
            parallel.states,
            parallel.transitions,
        )

    def test_dfs_also_finds_violation(self):
        p = make_protocol("piranha-buggy", 2, 2, 2)
        v = model_check(p, 1, search="dfs")
        assert_valid_counterexample(p, v)
        # DFS runs are long; the extracted cycle must still verify
        assert len(v.run.events) > 12

    def test_max_states_inconclusive(self):
        p = make_protocol("piranha-buggy", 2, 2, 3)
        v = model_check(p, 2, max_states=100)
        assert v.result == INCONCLUSIVE
        assert v.states > 100
        assert v.run is None and v.cycle is None

    def test_parameter_validation(self):
        p = make_protocol("piranha", 2, 2, 1)
        with pytest.raises(ParameterError):
            model_check(p, 0)
        with pytest.raises(ParameterError):
            model_check(p, 3)
        with pytest.raises(ParameterError):
            model_check(p, 1, search="sideways")
        with pytest.raises(ParameterError):
            model_check(p, 1, max_states=0)
        with pytest.raises(ParameterError):
            model_check(p, 1, threads=0)
        wrong_v = make_protocol("piranha", 2, 2, 1, v=1)
        with pytest.raises(ParameterError):
            model_check(wrong_v, 1)

    def test_verdict_json_shape(self):
        p = make_protocol("piranha-buggy", 2, 2, 2)
        d = model_check(p, 2).to_json()
        assert d["k"] == 2 and d["result"] == "counterexample"
        assert d["initial_owners"] == [1, 1]
        assert isinstance(d["run"], list) and isinstance(d["cycle"], dict)
        assert d["cycle"]["canonical"] is True
        assert [e["op"] for e in d["unambiguous_trace"]] == ["W", "R", "W", "R"]


class TestCheckAllK:
    def test_buggy_reports_k2(self):
        p = make_protocol("piranha-buggy", 2, 2, 2)
        verdicts = check_all_k(p)
        assert [v.k for v in verdicts] == [1, 2]
        assert verdicts[1].result == COUNTEREXAMPLE

    def test_correct_all_clear(self):
        p = make_protocol("piranha", 2, 2, 1)
        assert [v.result for v in check_all_k(p)] == [NO_VIOLATION, NO_VIOLATION]

    def test_k_range_follows_min(self):
        p = make_protocol("piranha", 1, 3, 1)
        verdicts = check_all_k(p)
        assert [v.k for v in verdicts] == [1]


class TestExtractCycle:
    def test_known_violating_run(self):
        p = make_protocol("piranha-buggy", 2, 2, 3)
        trace, cycle = extract_cycle(p, RUN12, p.initial_state((1, 1)), 2)
        assert trace.events == (W(1, 1, 1), R(1, 2, 0), W(2, 2, 1), R(2, 1, 0))
        assert cycle.vertices == (1, 2, 3, 4)
        assert cycle.procs == (1, 2) and cycle.locs == (2, 1)
        assert cycle.canonical

    def test_k1_requires_acceptance(self):
        # the location-2 constraint at k=1 blocks the nonzero write
        p = make_protocol("piranha-buggy", 2, 2, 3)
        with pytest.raises(PreconditionError):
            extract_cycle(p, RUN12, p.initial_state((1, 1)), 1)

    def test_unaccepted_run_rejected(self):
        p = make_protocol("piranha", 2, 1, 3)
        run8 = Run(
            (
                ACKX(1, 1), UPD(1), W(1, 1, 1), R(2, 1, 0), UPD(2), ACKS(2, 1),
                UPD(2), R(2, 1, 1),
            ),
            Params(2, 1, 1),
        )
        with pytest.raises(PreconditionError):
            extract_cycle(p, run8, p.initial_state((1,)), 1)


class TestExploreProtocol:
    def test_counts(self):
        p = make_protocol("piranha", 2, 2, 1)
        states, transitions = explore_protocol(p)
        assert states > 100
        assert transitions > states

    def test_cap(self):
        p = make_protocol("piranha", 2, 2, 1)
        with pytest.raises(ParameterError):
            explore_protocol(p, max_states=10)


class TestValidateAssumptions:
    def test_piranha_clean(self):
        p = make_protocol("piranha", 2, 2, 2)
        report = validate_assumptions(p, depth=4, run_samples=60)
        assert report.ok
        assert report.nodes > 0 and report.edges > 0
        assert report.symmetry_checks > 0

    def test_depth_zero_empty(self):
        p = make_protocol("piranha", 2, 2, 2)
        report = validate_assumptions(p, depth=0)
        assert report.ok
        assert report.edges == 0
        assert report.nodes == len(p.initial_states())

    def test_asymmetric_fixture_flagged(self):
        fixture = PrivilegedWriterProtocol(n=2, m=2, v=2)
        report = validate_assumptions(fixture, depth=3, run_samples=40)
        assert len(report.symmetry_violations) >= 1
        assert all(v.kind == "proc" for v in report.symmetry_violations)
        assert not report.causality_violations

    def test_acausal_fixture_flagged(self):
        fixture = HallucinatingReadProtocol()
        report = validate_assumptions(fixture, depth=2)
        assert len(report.causality_violations) >= 1
        assert not report.symmetry_violations

    def test_report_json(self):
        fixture = PrivilegedWriterProtocol()
        d = validate_assumptions(fixture, depth=2, run_samples=10).to_json()
        assert d["ok"] is False
        assert d["symmetry_violations"]
        first = d["symmetry_violations"][0]
        assert set(first) == {"kind", "perm", "failed_at", "run"}

    def test_negative_depth(self):
        with pytest.raises(ParameterError):
            validate_assumptions(PrivilegedWriterProtocol(), depth=-1)

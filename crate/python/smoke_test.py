"""Smoke test for the compiled `sparsim` extension module.

Build it first (see README.md), then run `python3 python/smoke_test.py`.
"""

import math
import pathlib
import sys

HERE = pathlib.Path(__file__).resolve().parent
sys.path.insert(0, str(HERE))

import sparsim  # noqa: E402

PERIOD_TWO = """{
  "n": 4, "input": "0000",
  "u1": {"type": "qft-then-reversible", "qft_targets": [1, 2, 3]},
  "u2": {"type": "qft", "targets": [0, 1, 2, 3]},
  "measure": [0, 1, 2, 3]
}"""


def main():
    circuit = sparsim.Circuit.from_json(PERIOD_TWO)
    assert circuit.n == 4 and circuit.measure == [0, 1, 2, 3]

    exact = circuit.exact_distribution()
    assert set(exact) == {"0000", "0001"}, exact

    approx = sparsim.simulate(circuit, t=2, epsilon=0.1, seed=7)
    assert set(approx) == {"0000", "0001"}, approx
    assert abs(sum(approx.values()) - 1.0) < 1e-12

    state = sparsim.reconstruct_state(circuit, t=2, epsilon=0.1, seed=7)
    assert abs(sum(abs(a) ** 2 for a in state.values()) - 1.0) < 1e-12
    for amp in state.values():
        assert abs(amp - 1 / math.sqrt(2)) < 0.1, state

    weights = sparsim.significant_weights(circuit, theta=0.3, seed=1)
    assert sorted(w[0] for w in weights) == ["0000", "0001"], weights

    forward, backward = sparsim.verify_fourier_conjugation(4)
    assert forward < 1e-12 and backward < 1e-12

    try:
        sparsim.Circuit.from_json('{"n": 1}')
    except ValueError as err:
        print("rejected malformed circuit:", err)
    else:
        raise AssertionError("malformed circuit accepted")

    print("sparsim", sparsim.__version__, "smoke test passed")


if __name__ == "__main__":
    main()

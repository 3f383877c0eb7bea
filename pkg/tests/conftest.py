"""Shared fixtures and hypothesis strategies.

The worked example used throughout the suite is R=10, c_check=4, c_send=2,
kappa=1 on a committee of 10 with threshold 3 and assortativity 0.2. Its
interior fixed point is exactly 9/17.
"""
from __future__ import annotations

import pytest
from hypothesis import strategies as st

from consensus_evo import Belief, ModelConfig, PayoffParams, ProtocolParams, ValidatedModel, validate_model


@pytest.fixture
def example_payoffs() -> PayoffParams:
    return PayoffParams(reward=10.0, check_cost=4.0, send_cost=2.0, penalty=1.0)


@pytest.fixture
def example_protocol() -> ProtocolParams:
    return ProtocolParams(committee_size=10, threshold=3)


@pytest.fixture
def example_belief() -> Belief:
    return Belief(assortativity=0.2)


@pytest.fixture
def make_model(example_payoffs, example_protocol, example_belief):
    """Factory for validated example models with selective overrides."""

    def build(
        x1: float = 0.6,
        *,
        payoffs: PayoffParams | None = None,
        protocol: ProtocolParams | None = None,
        belief: Belief | None = None,
        threshold: int | None = None,
        assortativity: float | None = None,
        max_rounds: int = 10_000,
        rng_seed: int = 0,
    ) -> ValidatedModel:
        proto = protocol if protocol is not None else example_protocol
        if threshold is not None:
            proto = ProtocolParams(committee_size=proto.committee_size, threshold=threshold)
        bel = belief if belief is not None else example_belief
        if assortativity is not None:
            bel = Belief(assortativity=assortativity)
        config = ModelConfig(
            payoffs=payoffs if payoffs is not None else example_payoffs,
            protocol=proto,
            belief=bel,
            initial_honest_fraction=x1,
            max_rounds=max_rounds,
            rng_seed=rng_seed,
        )
        validated = validate_model(config)
        assert isinstance(validated, ValidatedModel), validated
        return validated

    return build


def benchmark_payoffs(max_step: float = 10.0) -> st.SearchStrategy[PayoffParams]:
    """Payoff draws honoring the strict ordering R > c_check > c_send > kappa."""
    gap = st.floats(min_value=0.1, max_value=max_step, allow_nan=False, allow_infinity=False)
    return st.builds(
        lambda k, d1, d2, d3: PayoffParams(
            reward=k + d1 + d2 + d3,
            check_cost=k + d1 + d2,
            send_cost=k + d1,
            penalty=k,
        ),
        st.floats(min_value=0.1, max_value=5.0, allow_nan=False),
        gap,
        gap,
        gap,
    )


def fractions() -> st.SearchStrategy[float]:
    return st.floats(min_value=0.0, max_value=1.0, allow_nan=False)

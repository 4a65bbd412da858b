import numpy as np
import pytest

from knockoff_rl.envs.synthetic import Transition, env_reset, env_step, make_env_spec


def iid_action_buffer(spec, n, rng, action_std=0.6, with_knockoffs=True):
    """
    Transitions under a state-independent Gaussian policy.

    Actions and knockoffs are independent N(0, action_std^2) draws clamped
    to the action box, so (a, a_knockoff) are exchangeable given s.
    """
    bound = spec.action_bound
    buffer = []
    s = env_reset(spec, rng)
    t = 0
    episode = 0
    for _ in range(n):
        a = np.clip(action_std * rng.standard_normal(spec.action_dim), -bound, bound)
        ak = np.clip(action_std * rng.standard_normal(spec.action_dim), -bound, bound) if with_knockoffs else None
        s_next, r, done = env_step(spec, s, a, t=t, rng=rng)
        buffer.append(Transition(s=s, a=a, a_knockoff=ak, r=r, s_next=s_next, t=t, episode_id=episode))
        if done:
            s = env_reset(spec, rng)
            t = 0
            episode += 1
        else:
            s = s_next
            t += 1
    return buffer


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def default_spec():
    return make_env_spec(seed=0, name="lq-default")


@pytest.fixture
def small_spec():
    # 2 states, 6 actions, G = {1, 4}
    return make_env_spec(state_dim=2, n_true=2, action_dim=6, true_indices=[1, 4], horizon=20, seed=3)


@pytest.fixture
def null_spec():
    return make_env_spec(state_dim=4, n_true=0, action_dim=20, seed=1, name="lq-null")

import pytest


@pytest.fixture(scope="session")
def policy_cache():
    """Generated scripted-policy logs, shared across test modules (closed-
    loop generation is the expensive part; replaying them is cheap)."""
    from pomdar.policies import scripted_policy

    cache: dict = {}

    def get(task_id, embodiment_id="hand_full", seed=0):
        key = (task_id, embodiment_id, seed)
        if key not in cache:
            cache[key] = scripted_policy(task_id, embodiment_id, seed=seed)
        return cache[key]

    return get

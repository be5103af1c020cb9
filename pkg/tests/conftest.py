import numpy as np
import pytest
from dataclasses import asdict

from autorc import DriveLoop, SimConfig, Tub, builtin_scenario


@pytest.fixture(scope="session")
def small_tub(tmp_path_factory):
    """300 expert-driven records on the default track, shared read-only."""
    path = tmp_path_factory.mktemp("data") / "small_tub"
    sim_cfg = SimConfig()
    tub = Tub.create(path, sim_config=asdict(sim_cfg))
    loop = DriveLoop(builtin_scenario("default"), sim_cfg=sim_cfg, tub=tub,
                     jitter_std=0.05, jitter_seed=7)
    loop.set_mode("expert")
    loop.set_recording(True)
    while len(tub) < 300:
        loop.tick()
    tub.close()
    return Tub.open(path)


@pytest.fixture(scope="session")
def sample_frame():
    """One rendered frame from the spawn pose of the obstacle scenario."""
    from autorc.camera import Renderer
    from autorc.sim import VehicleState

    scenario = builtin_scenario("obstacles")
    renderer = Renderer(scenario)
    x, y, heading = scenario.spawn_pose()
    return renderer.render(VehicleState(x=x, y=y, heading=heading))


@pytest.fixture()
def rng():
    return np.random.default_rng(0)

import numpy as np
import pytest

import saltsim as ss

SQRT2 = np.sqrt(2.0)


class TestZooConstruction:
    def test_exactly_five_entries(self):
        names = [e.name for e in ss.zoo()]
        assert names == ["bouncing-ball", "ceiling-mass", "decoupled-pair",
                         "soft-trot", "rigid-trot"]

    def test_construction_is_idempotent(self):
        a, b = ss.zoo(), ss.zoo()
        for ea, eb in zip(a, b):
            assert np.array_equal(ea.initial.q, eb.initial.q)
            assert ea.model.d == eb.model.d

    def test_unknown_name(self):
        with pytest.raises(KeyError):
            ss.zoo_model("walking-table")

    def test_every_entry_passes_core_validation(self):
        for entry in ss.zoo():
            report = ss.validate_model(entry.model, around=entry.initial)
            assert report.mass_symmetric, entry.name
            assert report.mass_positive_definite, entry.name
            assert report.gradients_ok, entry.name
            assert report.restitution_nonnegative, entry.name

    def test_decoupling_verdicts(self):
        # entries 1-4 satisfy the limb-decoupling clauses; rigid-trot fails
        # them (asserted both ways), with clause 1 (block-diagonal mass)
        # violated by its x-theta coupling
        for entry in ss.zoo():
            report = ss.validate_model(entry.model, around=entry.initial)
            assert report.decoupling_declared, entry.name
            if entry.name == "rigid-trot":
                assert report.decoupled is False
                assert not report.clause_block_mass.passed
            else:
                assert report.decoupled is True, entry.name


class TestZooFacts:
    def test_plastic_ball_rests_at_sqrt2(self, cfg):
        entry = ss.zoo_entry("bouncing-ball")
        tr = ss.simulate(entry.model, entry.initial, entry.horizon, cfg)
        assert abs(tr.word.events[0].t - SQRT2) < cfg.tol_event
        assert np.allclose(tr.terminal.z, [0.0, 0.0], atol=1e-9)

    def test_pair_equal_heights_simultaneous(self, cfg):
        entry = ss.zoo_entry("decoupled-pair")
        tr = ss.simulate(entry.model, entry.initial, entry.horizon, cfg)
        assert len(tr.word.events) == 1
        assert tr.word.events[0].constraints.indices() == (0, 1)
        assert len(tr.word.modes) == 2

    def test_rigid_trot_simultaneous_rest_vs_offset_rocking(self, sweep_cfg):
        entry = ss.zoo_entry("rigid-trot")
        tr0 = ss.simulate(entry.model, entry.initial, entry.horizon, sweep_cfg,
                          sample_dt=entry.horizon)
        post = tr0.word.events[0].post
        assert abs(post.v[2]) < 1e-10  # simultaneous: rotation killed
        for sign in (+1.0, -1.0):
            z = entry.initial.z.copy()
            z[2] = sign * 1e-3
            tr = ss.simulate(entry.model, ss.State(0.0, z[:3], z[3:]),
                             entry.horizon, sweep_cfg, sample_dt=entry.horizon)
            first = tr.word.events[0].post
            assert abs(first.v[2]) > 0.05  # ordered: rotation bounded away from 0

    def test_soft_trot_touchdown_order_follows_pitch(self, sweep_cfg):
        entry = ss.zoo_entry("soft-trot")
        for theta0, first in ((0.02, 0), (-0.02, 1)):
            z = entry.initial.z.copy()
            z[2] = theta0
            tr = ss.simulate(entry.model, ss.State(0.0, z[:5], z[5:]),
                             entry.horizon, sweep_cfg, sample_dt=entry.horizon)
            assert tr.word.events[0].constraints.indices() == (first,)
            kinds = {e.kind for e in tr.word.events}
            assert "deactivation" in kinds  # spring rebound lifts off

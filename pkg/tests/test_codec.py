import numpy as np
import pytest

from pmlab.channels import bsc, qsc
from pmlab.codec import (UNDECIDED, DyadicMessage, bit_error_experiment,
                         common_prefix_bits, decode_bits, decode_box,
                         encode_bits, random_bits)
from pmlab.engine import PmSession
from pmlab.errors import BadParam
from pmlab.transport import make_kit


class TestDyadicMessages:
    def test_midpoints(self):
        assert encode_bits("0") == 0.25
        assert encode_bits("1") == 0.75
        assert encode_bits("101") == pytest.approx(0.6875)

    def test_exact_midpoint_any_length(self):
        m = DyadicMessage("10" * 40)
        assert m.k == 80
        assert 0 < m.point_exact < 1
        with pytest.raises(BadParam):
            m.point  # float midpoints cap at 40 bits

    def test_rejects_bad_bits(self):
        with pytest.raises(BadParam):
            DyadicMessage("10a")
        with pytest.raises(BadParam):
            DyadicMessage("")

    def test_random_bits_deterministic(self):
        rng = np.random.default_rng(0)
        b = random_bits(16, rng)
        assert len(b) == 16 and set(b) <= {"0", "1"}


class TestDecoding:
    def test_decode_inside_cell(self):
        assert decode_bits(0.26, 0.49, 2) == "01"
        assert decode_bits(0.6875, 0.6876, 3) == "101"

    def test_decode_straddling_is_undecided(self):
        assert decode_bits(0.49, 0.51, 1) is UNDECIDED

    def test_closed_right_endpoint(self):
        assert decode_bits(0.30, 0.50, 1) == "0"

    def test_rejects_bad_interval(self):
        with pytest.raises(BadParam):
            decode_bits(0.7, 0.3, 2)

    def test_common_prefix(self):
        assert common_prefix_bits(0.3, 0.31) == "010011"
        assert common_prefix_bits(0.2, 0.8) == ""
        assert len(common_prefix_bits(0.300001, 0.300002, k_max=12)) == 12

    def test_round_trip_through_session(self, bsc02_kit):
        bits = "110100101"
        session = PmSession(bsc02_kit, message=encode_bits(bits), seed=4)
        for _ in range(120):
            session.step()
        assert decode_box(session, len(bits)) == [bits]


class TestBitErrorExperiments:
    def test_noiseless_channel_decodes_every_block(self):
        kit = make_kit(bsc(0.0), "cdf1d")
        report = bit_error_experiment(kit, k=20, n_steps=25, trials=20,
                                      rng=np.random.default_rng(1))
        assert report.error_rate == 0.0
        assert report.undecided_rate == 0.0

    def test_below_capacity_mostly_decodes(self, bsc02_kit):
        report = bit_error_experiment(bsc02_kit, k=100, n_steps=500,
                                      trials=30, rng=np.random.default_rng(2))
        assert report.error_rate < 0.35
        assert report.decided_error_rate <= report.error_rate

    def test_above_capacity_fails(self, bsc02_kit):
        report = bit_error_experiment(bsc02_kit, k=200, n_steps=500,
                                      trials=15, rng=np.random.default_rng(3))
        assert report.error_rate > 0.5

    def test_multidim_float_path(self):
        kit = make_kit(qsc(0.0), "kr-grid")
        report = bit_error_experiment(kit, k=6, n_steps=8, trials=10,
                                      rng=np.random.default_rng(4))
        assert report.error_rate == 0.0

    def test_rejects_bad_args(self, bsc02_kit):
        with pytest.raises(BadParam):
            bit_error_experiment(bsc02_kit, k=0, n_steps=10, trials=1,
                                 rng=np.random.default_rng(0))

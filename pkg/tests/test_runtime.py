import pytest

from src.constants import BLAS_THREAD_VARS
from src.core.errors import ConfigError
from src.runtime import apply_thread_limit, thread_limit


class TestThreadLimit:
    def test_unset(self):
        assert thread_limit({}) is None
        assert thread_limit({"HK_THREADS": "  "}) is None

    def test_exports_blas_variables(self):
        env = {"HK_THREADS": "2"}
        assert apply_thread_limit(env) == 2
        for name in BLAS_THREAD_VARS:
            assert env[name] == "2"

    def test_existing_variables_are_kept(self):
        env = {"HK_THREADS": "2", "OMP_NUM_THREADS": "8"}
        apply_thread_limit(env)
        assert env["OMP_NUM_THREADS"] == "8"

    def test_unset_leaves_environment_alone(self):
        env = {}
        assert apply_thread_limit(env) is None
        assert env == {}

    @pytest.mark.parametrize("value", ["0", "-1", "two"])
    def test_invalid_values(self, value):
        with pytest.raises(ConfigError):
            thread_limit({"HK_THREADS": value})

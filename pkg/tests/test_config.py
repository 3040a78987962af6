import json

import pytest

from src.config import DEFAULT_DENSITIES, DEFAULT_SIZE_CUTOFFS, PipelineConfig


@pytest.fixture
def config_file(tmp_path):
    def write(payload):
        path = tmp_path / 'run.json'
        path.write_text(json.dumps(payload), encoding='utf-8')
        return str(path)

    return write


class TestPipelineConfig:

    def test_defaults(self):
        cfg = PipelineConfig.from_sources()
        assert cfg.densities == DEFAULT_DENSITIES
        assert cfg.size_cutoffs == DEFAULT_SIZE_CUTOFFS
        assert cfg.baseline_fit_set == 'licit'
        assert cfg.balanced_eval

    def test_json_file(self, config_file):
        cfg = PipelineConfig.from_sources(config_file({'seed': 42, 'density': 0.3, 'feature_set': 'raw'}))
        assert cfg.seed == 42
        assert cfg.density == 0.3
        assert cfg.feature_set == 'raw'

    def test_flags_win_over_file(self, config_file):
        path = config_file({'seed': 42, 'epochs': 10})
        cfg = PipelineConfig.from_sources(path, {'seed': 7, 'epochs': None})
        assert cfg.seed == 7
        assert cfg.epochs == 10

    def test_unknown_key_is_named(self, config_file):
        with pytest.raises(ValueError, match="learnin_rate"):
            PipelineConfig.from_sources(config_file({'learnin_rate': 0.1}))

    def test_missing_file(self, tmp_path):
        with pytest.raises(ValueError):
            PipelineConfig.from_sources(str(tmp_path / 'absent.json'))

    def test_not_json(self, tmp_path):
        path = tmp_path / 'bad.json'
        path.write_text('{seed: 1', encoding='utf-8')
        with pytest.raises(ValueError):
            PipelineConfig.from_sources(str(path))

    @pytest.mark.parametrize('overrides', [
        {'feature_set': 'all'},
        {'train_fraction': 1.0},
        {'density': -0.1},
        {'densities': []},
        {'densities': [0.5, 1.5]},
        {'size_cutoffs': [400.0, 100.0]},
        {'baseline_fit_set': 'fraud'},
        {'epochs': 0},
        {'dump_networks': -1},
    ])
    def test_invalid_values(self, overrides):
        with pytest.raises(ValueError):
            PipelineConfig.from_sources(overrides=overrides)

    def test_train_config(self):
        cfg = PipelineConfig.from_sources(overrides={
            'learning_rate': 0.0, 'epochs': 3, 'batch_size': 8, 'seed': 9, 'init_range': 0.0,
        })
        tc = cfg.train_config()
        assert (tc.learning_rate, tc.epochs, tc.batch_size, tc.seed, tc.init_range) == (0.0, 3, 8, 9, 0.0)

    def test_synth_config(self):
        cfg = PipelineConfig.from_sources(overrides={'n': 500, 'fraud_fraction': 0.2, 'seed': 3})
        sc = cfg.synth_config()
        assert (sc.n, sc.fraud_fraction, sc.seed) == (500, 0.2, 3)

    def test_dataset_path(self, tmp_path):
        cfg = PipelineConfig.from_sources(overrides={'workdir': str(tmp_path)})
        assert cfg.dataset_path == str(tmp_path / 'dataset.csv')
        cfg = PipelineConfig.from_sources(overrides={'dataset': 'other.csv'})
        assert cfg.dataset_path == 'other.csv'

"""Tests for the command-line entry point."""

import json
from pathlib import Path

import pytest

import src
from src.main import collect_overrides, create_parser, main
from src.utils.spinner import Spinner


class TestCommandLineArguments:
    """Test argument parsing."""

    def test_run_flags(self):
        """Test that run flags parse into typed values."""
        args = create_parser().parse_args(
            ['--preset', 'single_mode', '--n', '64', '--dt', '1e-3', '--t-end', '0.5', '--scheme', 'imex']
        )
        assert args.preset == 'single_mode'
        assert args.n == 64
        assert args.dt == 1e-3
        assert args.t_end == 0.5
        assert args.scheme == 'imex'

    def test_auto_dt(self):
        """Test that --dt accepts 'auto' and rejects other words."""
        parser = create_parser()
        assert parser.parse_args(['--dt', 'auto']).dt == 'auto'
        with pytest.raises(SystemExit):
            parser.parse_args(['--dt', 'fast'])

    def test_overrides_skip_unset_flags(self):
        """Test that only given flags become configuration overrides."""
        args = create_parser().parse_args(['--nu', '0.3', '--sweep', '0.1,0.05'])
        assert collect_overrides(args) == {'nu': 0.3, 'sweep_values': '0.1,0.05'}

    def test_version(self, capsys):
        """Test that --version prints the program version and exits."""
        with pytest.raises(SystemExit) as excinfo:
            create_parser().parse_args(['--version'])
        assert excinfo.value.code == 0
        assert 'muskat-spectral 0.1.0' in capsys.readouterr().out

    def test_help_lists_exit_codes(self):
        """Test that the help text documents the exit codes."""
        assert 'Exit codes' in create_parser().format_help()


class TestMain:
    """Test end-to-end exit codes."""

    def test_create_config(self):
        """Test that --create-config writes the default file."""
        assert main(['--create-config']) == 0
        assert Path('config/muskat.yaml').exists()

    def test_invalid_nu_is_config_error(self):
        """Test exit code 2 for a corner parameter outside (0,1)."""
        assert main(['--preset', 'corner', '--nu', '1.5', '-q']) == 2

    def test_missing_config_file(self):
        """Test exit code 2 for an absent --config file."""
        assert main(['--config', 'missing.yaml', '-q']) == 2

    def test_flat_run_writes_artifacts(self, tmp_path):
        """Test that a short flat run exits 0 and writes its outputs."""
        out = tmp_path / 'run'
        code = main(['--preset', 'flat', '--n', '16', '--t-end', '0.02', '--dt', '0.01', '--out', str(out), '-q'])
        assert code == 0
        assert (out / 'trajectory.h5').exists()
        assert (out / 'diagnostics.csv').exists()
        assert (out / 'run.log').exists()
        summary = json.loads((out / 'summary.json').read_text())
        assert summary['exit_code'] == 0
        assert summary['plan']['n_points'] == 16

    def test_markdown_summary(self, tmp_path):
        """Test that --format selects the summary file type."""
        out = tmp_path / 'md'
        code = main(['--n', '16', '--t-end', '0.01', '--dt', '0.01', '--out', str(out), '--format', 'markdown', '-q'])
        assert code == 0
        assert (out / 'summary.md').exists()


class TestSpinner:
    """Test the progress readout."""

    def test_status_line_without_progress(self):
        """Test the plain message before the first update."""
        assert Spinner('Running').status_line('⠋') == '⠋ Running...'

    def test_status_line_with_progress(self):
        """Test the simulated-time readout."""
        s = Spinner('Running')
        s.update(0.5, 1.0)
        line = s.status_line('⠋')
        assert 't = 0.5000 / 1' in line
        assert '( 50.0%)' in line


class TestPackageMetadata:
    """Test the package metadata against the build manifest."""

    def test_author_matches_manifest(self):
        """Test that the package author is the one named in pyproject.toml."""
        manifest = (Path(__file__).resolve().parent.parent / 'pyproject.toml').read_text()
        assert f'name = "{src.__author__}"' in manifest
        assert f'version = "{src.__version__}"' in manifest

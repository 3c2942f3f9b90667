import json

import numpy as np
import pytest

from vclib.checks import log_f_mean
from vclib.cli import make_parser, run_cli
from vclib.dataset.utils import read_csv

# one-way a=3, m=2 statistics with the ratio at the mean of log F(2, 3), so pl(0) = 1
BALANCED_STATS = '{!r},3.0'.format(float(2. * np.exp(log_f_mean(2, 3))))
BALANCED_ARGS = ['--design', 'eigen', '--eigen', '2:2,0:3', '--stats', BALANCED_STATS]


def run_json(args, capsys):
    code = run_cli(args)
    out = capsys.readouterr().out
    return code, json.loads(out) if out else None


class TestParser:
    def test_commands(self):
        parser = make_parser()
        args = parser.parse_args(['interval', '--alpha', '0.1', '--grid', '0:0.9:10', '--quad-tol', '1e-8'])
        assert args.command == 'interval' and args.alpha == 0.1 and args.quad_tol == 1e-8

    @pytest.mark.parametrize('argv', [
        [],
        ['bogus'],
        ['pl', '--unknown'],
        ['interval', '--alpha', '2'] + BALANCED_ARGS,
        ['pl', '--grid', '0:0.5:1'] + BALANCED_ARGS,
        ['pl', '--design', 'oneway', '--data', 'missing.csv'],
    ])
    def test_usage_errors(self, argv, capsys):
        assert run_cli(argv) == 1


class TestCommands:
    def test_interval(self, capsys):
        code, out = run_json(['interval', '--alpha', '0.05', '--grid', '0:0.999:60'] + BALANCED_ARGS, capsys)
        assert code == 0
        assert out['lower'] == 0.
        assert 0. < out['upper'] < 0.999
        assert out['multimodal_flag'] is False
        assert out['config']['alpha'] == 0.05 and out['config']['quad_tol'] == 1e-9

    def test_pl_curve(self, tmp_path, capsys):
        path = tmp_path / 'pl.csv'
        code = run_cli(['pl', '--grid', '0:0.999:400', '--output', str(path)] + BALANCED_ARGS)
        assert code == 0
        df = read_csv(str(path))
        assert len(df) == 400
        assert ((df['pl'] >= 0.) & (df['pl'] <= 1.)).all()
        assert path.read_text().startswith('# ')

    def test_reduce_round_trip(self, tmp_path, capsys):
        reduction = tmp_path / 'reduction.json'
        assert run_cli(['reduce', '--output', str(reduction)] + BALANCED_ARGS) == 0
        assert json.loads(reduction.read_text())['reduction']['mults'] == [2, 3]

        fused, replayed = tmp_path / 'fused.csv', tmp_path / 'replayed.csv'
        assert run_cli(['pl', '--grid', '0:0.99:25', '--output', str(fused)] + BALANCED_ARGS) == 0
        assert run_cli(['pl', '--grid', '0:0.99:25', '--reduction', str(reduction), '--output', str(replayed)]) == 0
        np.testing.assert_array_equal(read_csv(str(fused))['pl'].values, read_csv(str(replayed))['pl'].values)

    def test_oneway_file(self, tmp_path, capsys):
        data = tmp_path / 'data.csv'
        data.write_text('group,value\na,1.2\na,0.4\nb,2.5\nb,3.1\nc,-0.7\nc,0.1\n')
        code, out = run_json(['reduce', '--data', str(data)], capsys)
        assert code == 0
        assert out['reduction']['mults'] == [2, 3]
        assert out['reduction']['n'] == 6

    def test_simulate(self, capsys):
        args = ['simulate', '--pattern', '2,3,10', '--reps', '3', '--seed', '1', '--grid', '0:0.999:30']
        code, out = run_json(args, capsys)
        assert code == 0
        study = out['studies'][0]
        assert len(study['records']) == 3
        assert 'runtime' not in study['records'][0]
        assert out['config']['seed'] == 1

        code, timed = run_json(args + ['--timing'], capsys)
        assert 'runtime' in timed['studies'][0]['records'][0]

    def test_simulate_is_deterministic(self, capsys):
        args = ['simulate', '--pattern', '2,4,4,5', '--reps', '4', '--seed', '8', '--grid', '0:0.999:30']
        _, serial = run_json(args + ['--workers', '1'], capsys)
        _, parallel = run_json(args + ['--workers', '2'], capsys)
        assert serial['studies'] == parallel['studies']

    def test_check(self, capsys):
        code, out = run_json(['check', '--draws', '2000', '--instances', '2', '--reps', '40'], capsys)
        assert code == 0, out
        assert out['passed'] is True


class TestExitCodes:
    def test_data_error(self, capsys):
        assert run_cli(['reduce', '--design', 'eigen', '--eigen', '1:1,2:1', '--stats', '1,1']) == 2

    def test_parse_error(self, tmp_path, capsys):
        data = tmp_path / 'data.csv'
        data.write_text('group,value\na,1\nb,x\nb,2\n')
        assert run_cli(['reduce', '--data', str(data)]) == 2
        assert 'line 3' in capsys.readouterr().err

    def test_numerical_error(self, capsys):
        assert run_cli(['reduce', '--design', 'eigen', '--eigen', '2:2,0:3', '--stats', '1,0']) == 3

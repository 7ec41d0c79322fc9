import click
import functools
import logging
import numpy as np
import sys

from pathlib import Path
from wtpc.config import PipelineConfig
from wtpc.data.cleaning import clean
from wtpc.dynamic.model import DynamicModel, Exogenous, fit_dynamic
from wtpc.environmental import MODES, fit_environmental, EnhancedModel
from wtpc.errors import WtpcError, DataError, EXIT_CODES
from wtpc.evaluation import evaluate, emit_report
from wtpc.io.common import AbstractWriter, dumps, write_json, read_json, write_csv
from wtpc.io.scada import parse_scada, write_scada
from wtpc.models import FittedModel, ModelSpec, fit
from wtpc.residuals import CORRECTIONS, ResidualProfile, analyze_residuals, residuals, write_histogram_csv
from wtpc.selection import select_order
from wtpc.synthetic import GeneratorConfig, generate, write_corpus


EPILOG = "\b\nExit codes:\n" + "\n".join(
    f"  {code}  {description}" for code, description in EXIT_CODES)


class ArtifactDirectory(AbstractWriter):
    def __init__(self, path, write_fn):
        super().__init__(path, exist_ok=True)
        self._write_fn = write_fn

    def _write(self, base_path):
        return self._write_fn(base_path)


def common_options(f):
    options = [
        click.option('--config', 'config_path', type=click.Path(exists=True), default=None,
                     help='flat YAML file with default values for all flags'),
        click.option('--verbose', is_flag=True, default=False, help='log debug output'),
        click.option('--progress', is_flag=True, default=None, help='show progress bars'),
        click.option('--out', default=None, help='output file or directory'),
    ]
    for option in reversed(options):
        f = option(f)
    return f


def data_options(f):
    f = click.option('--iqr-k', type=float, default=None, help='outlier fence multiplier')(f)
    f = click.option('--schema', default=None, help='YAML schema file or inline column mapping')(f)
    f = click.option('--data', default=None, help='SCADA data file')(f)
    return f


def pipeline_command(name, help):
    """
    Registers a subcommand that receives a PipelineConfig and reports
    WtpcErrors as JSON on stderr with the error's exit code.
    """

    def decorator(f):
        @functools.wraps(f)
        def run(config_path, verbose, **flags):
            logging.basicConfig(
                level=logging.DEBUG if verbose else logging.INFO,
                format='%(levelname)s %(message)s', stream=sys.stderr, force=True)

            if 'class_' in flags:
                flags['class'] = flags.pop('class_')
            flags = dict((k, v) for k, v in flags.items() if v is not None and v != ())

            try:
                config = PipelineConfig.load(config_path, **flags)
            except ValueError as e:
                raise click.UsageError(str(e))

            try:
                f(config)
            except click.ClickException:
                raise
            except WtpcError as e:
                click.echo(dumps(e.to_json()), err=True)
                sys.exit(e.exit_code)
            except Exception as e:
                logging.debug('unexpected error', exc_info=True)
                click.echo(dumps({
                    'error': type(e).__name__,
                    'message': str(e),
                    'exit_code': 1
                }), err=True)
                sys.exit(1)

        return cli.command(name, help=help, epilog=EPILOG)(common_options(run))

    return decorator


@click.group(epilog=EPILOG)
def cli():
    pass


def load_clean(config, key='data'):
    schema = config.schema
    records = parse_scada(
        config.input_path(key, 'SCADA data'), schema, progress=bool(config['progress']))
    return clean(
        records, iqr_k=config['iqr_k'], normal_states=schema.normal_states, delta=config['delta'])


@data_options
@pipeline_command('clean', 'Apply the cleaning rules and write the cleaned data with a report.')
def clean_command(config):
    dataset = load_clean(config)

    def write(base_path):
        return [
            write_scada(base_path / 'clean.csv', dataset.records, config.schema),
            write_json(base_path / 'report.json', 'cleaning', dataset.report.to_json())]

    ArtifactDirectory(config.output_path(), write).write()
    click.echo(dumps(dataset.report.to_json()))


@click.option('--order', type=int, default=None, help='model order m')
@click.option('--class', 'class_', default=None, help='model class')
@data_options
@pipeline_command('fit', 'Fit one power curve model of a given class and order.')
def fit_command(config):
    model_class = config.model_class
    if config['order'] is None and model_class.fixed_order is None:
        raise click.UsageError(f"--order is required for class {model_class.value}")

    model = fit(ModelSpec(model_class, config['order']), load_clean(config))
    model.save(config.output_path())


@click.option('--workers', type=int, default=None, help='parallel fits')
@click.option('--grid', default=None, help='order grid, e.g. 4..30')
@click.option('--class', 'class_', default=None, help='model class')
@data_options
@pipeline_command('select', 'Sweep model orders and choose the one with minimal BIC.')
def select_command(config):
    result = select_order(
        config.model_class, config.grid, load_clean(config),
        workers=config['workers'], progress=bool(config['progress']))

    def write(base_path):
        return [
            result.write_csv(base_path / 'sweep.csv'),
            result.chosen_model.save(base_path / 'model.json')]

    ArtifactDirectory(config.output_path(), write).write()
    click.echo(f"chosen order {result.chosen_m}")


@click.option('--mode', type=click.Choice(sorted(MODES)), default=None, help='environmental regressors')
@click.option('--model', default=None, help='fitted base model JSON')
@data_options
@pipeline_command('enhance', 'Fit the angle and temperature corrections of a base model.')
def enhance_command(config):
    model_path = config.input_path('model', 'base model')
    enhanced = fit_environmental(FittedModel.load(model_path), load_clean(config), config['mode'])
    enhanced.save(config.output_path(), base_path=model_path)


@click.option('--min-count', type=int, default=None, help='minimum residuals per sigma bin')
@click.option('--correction', type=click.Choice(CORRECTIONS), default=None,
              help='multiple-testing correction across wind bins')
@click.option('--alpha', type=float, default=None, help='normality test level')
@click.option('--enhanced', default=None, help='enhanced model JSON')
@data_options
@pipeline_command('residuals', 'Estimate the residual scale profile and the Gaussian band.')
def residuals_command(config):
    enhanced = EnhancedModel.load(config.input_path('enhanced', 'enhanced model'))
    data = load_clean(config)
    profile = analyze_residuals(
        enhanced, data, alpha=config['alpha'], min_count=config['min_count'],
        correction=config['correction'])
    r_prime = profile.rescale(residuals(enhanced, data), data.wind)

    def write(base_path):
        return [
            write_json(base_path / 'profile.json', 'profile', profile.to_json()),
            profile.write_csv(base_path / 'profile.csv'),
            write_histogram_csv(base_path / 'histogram.csv', r_prime, data.wind)]

    ArtifactDirectory(config.output_path(), write).write()
    click.echo(f"Gaussian band [{profile.g_lo}, {profile.g_hi}]")


@click.option('--q2', type=int, default=None, help='MA order')
@click.option('--q1', type=int, default=None, help='AR order')
@click.option('--correction', type=click.Choice(CORRECTIONS), default=None,
              help='multiple-testing correction across wind bins')
@click.option('--alpha', type=float, default=None, help='normality test level')
@click.option('--profile', default=None, help='residual profile JSON')
@click.option('--enhanced', default=None, help='enhanced model JSON')
@data_options
@pipeline_command('arma', 'Fit an ARMA process to the glued rescaled residuals.')
def arma_command(config):
    enhanced_path = config.input_path('enhanced', 'enhanced model')
    profile = None
    if config['profile'] is not None:
        profile = ResidualProfile.from_json(
            read_json(config.input_path('profile', 'residual profile'), 'profile'))

    model = fit_dynamic(
        EnhancedModel.load(enhanced_path), load_clean(config), config.q1, config.q2,
        profile=profile, alpha=config['alpha'], correction=config['correction'])
    model.save(config.output_path(), enhanced_path=enhanced_path)


def load_exogenous(config):
    records = parse_scada(config.input_path('exog', 'exogenous data'), config.schema)
    for r in records:
        if r.wind is None or r.angle is None or r.temperature is None:
            raise DataError(f"exogenous record at {r.timestamp} lacks wind, angle or temperature")
    return Exogenous(
        np.array([r.wind for r in records], dtype=np.float64),
        np.array([r.angle for r in records], dtype=np.float64),
        np.array([r.temperature for r in records], dtype=np.float64),
        np.array([r.timestamp for r in records], dtype=np.int64))


@click.option('--level', type=float, default=None, help='confidence level of the intervals')
@click.option('--steps', type=int, default=None, help='number of steps to forecast')
@click.option('--exog', default=None, help='future wind, angle and temperature')
@click.option('--dynamic', default=None, help='dynamic model JSON')
@data_options
@pipeline_command('forecast', 'Forecast power with confidence intervals.')
def forecast_command(config):
    model = DynamicModel.load(config.input_path('dynamic', 'dynamic model'))
    history = load_clean(config) if config['data'] is not None else []
    forecast = model.predict_power(history, load_exogenous(config), steps=config['steps'])

    write_csv(
        config.output_path(), ['timestamp', 'power', 'variance', 'lo', 'hi'],
        forecast.rows(config['level']))


@click.option('--level', type=float, default=None, help='confidence level of the coverage audit')
@click.option('--horizons', default=None, help='forecast horizons in minutes')
@click.option('--validation', default=None, help='validation SCADA data file')
@click.option('--dynamic', multiple=True, default=None, help='dynamic model JSON, repeatable')
@click.option('--enhanced', default=None, help='enhanced model JSON')
@click.option('--model', default=None, help='static base model JSON')
@click.option('--schema', default=None, help='YAML schema file or inline column mapping')
@click.option('--iqr-k', type=float, default=None, help='outlier fence multiplier')
@pipeline_command('evaluate', 'Compare static, enhanced and dynamic models over horizons.')
def evaluate_command(config):
    static = FittedModel.load(config.input_path('model', 'static model'))
    enhanced = EnhancedModel.load(config.input_path('enhanced', 'enhanced model'))

    paths = config['dynamic'] or ()
    if isinstance(paths, str):
        paths = [paths]
    dynamics = []
    for p in paths:
        if not Path(p).exists():
            raise click.UsageError(f"dynamic model not found: {p}")
        dynamics.append(DynamicModel.load(p))

    residual_std = dynamics[0].profile.residual_std if dynamics else None
    report = evaluate(
        static, enhanced, dynamics, load_clean(config, 'validation'), config.horizons,
        level=config['level'], delta=config['delta'], residual_std=residual_std,
        progress=bool(config['progress']))

    emit_report(report, config.output_path())


@click.option('--n', type=int, default=None, help='records per season')
@click.option('--seed', type=int, default=None, help='random seed')
@pipeline_command('simulate', 'Generate a synthetic corpus with known ground truth.')
def simulate_command(config):
    corpus = generate(GeneratorConfig(seed=config['seed'], n_samples=config['n']))
    write_corpus(config.output_path(), corpus)


if __name__ == '__main__':
    cli()

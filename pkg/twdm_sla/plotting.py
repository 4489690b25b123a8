import os
import numpy as np
from matplotlib import pyplot as plt
from .utils import TwdmException, load_table


def plot_sweep(sweep_file, output_folder, plots_list=None):
    """Create static charts from a sweep table written by the simulator."""
    # Define what to plot
    if plots_list is None:
        plots_list = get_default_plots_list()

    # Load data
    rows = load_table(sweep_file)
    if len(rows) == 0:
        raise TwdmException('Sweep table %s has no rows to plot' % sweep_file)

    # Plot
    written = []
    for kind in plots_list:
        if kind not in plot_function_dict.keys():
            raise TwdmException("plot type '%s' is not defined." % kind)
        written += plot_function_dict[kind](rows, output_folder)
    return written


def get_default_plots_list():
    return ['compliance_curves', 'distribution_bars']


def _save(output_folder, title):
    os.makedirs(output_folder, exist_ok=True)
    filename = os.path.join(output_folder, title.replace(' ', '_'))
    plt.savefig(filename + '.png', bbox_inches='tight', pad_inches=0.05)
    plt.close()
    return filename + '.png'


def plot_compliance_curves(rows, output_folder):
    """Compliance vs SLA traffic fraction, one chart per (channel config, tuning time), one line per load and
    algorithm. Rows of other axes (distribution) are averaged."""
    written = []
    panels = sorted(set((r['ChannelConfig'], r['TuningUs']) for r in rows))
    for channel_config, tuning in panels:
        panel_rows = [r for r in rows if r['ChannelConfig'] == channel_config and r['TuningUs'] == tuning]
        plt.figure()
        for algorithm in sorted(set(r['Algorithm'] for r in panel_rows)):
            for load in sorted(set(r['Load'] for r in panel_rows)):
                curve = [r for r in panel_rows if r['Algorithm'] == algorithm and r['Load'] == load]
                fractions = sorted(set(r['SlaFraction'] for r in curve))
                values = [100 * np.mean([r['Compliance'] for r in curve if r['SlaFraction'] == f]) for f in fractions]
                plt.plot(100 * np.array(fractions), values, '.-', label='%s load %g%%' % (algorithm, 100 * load))
        plt.xlabel('SLA traffic (%)', fontsize=13)
        plt.ylabel('SLA compliance (%)', fontsize=13)
        title = 'Compliance %s tuning %gus' % (channel_config, tuning)
        plt.title(title, fontsize=15)
        plt.legend()
        plt.grid(True, alpha=0.3)
        written.append(_save(output_folder, title))
    return written


def plot_distribution_bars(rows, output_folder):
    """Mean compliance per arrival distribution, averaged over every other axis."""
    distributions = []
    for r in rows:
        if r['Distribution'] not in distributions:
            distributions.append(r['Distribution'])
    if len(distributions) < 2:
        return []
    values = [100 * np.mean([r['Compliance'] for r in rows if r['Distribution'] == d]) for d in distributions]
    plt.figure()
    plt.bar(np.arange(len(distributions)), values, color='grey')
    plt.xticks(np.arange(len(distributions)), distributions)
    plt.ylabel('Mean SLA compliance (%)', fontsize=13)
    plt.ylim(max(0, min(values) - 5), 100)
    title = 'Compliance by distribution'
    plt.title(title, fontsize=15)
    return [_save(output_folder, title)]


def plot_runtime(rows, output_folder):
    """Median per-frame merge time vs line capacity (profile table), IQR as error bars."""
    plt.figure()
    for algorithm in sorted(set(r['Algorithm'] for r in rows)):
        curve = sorted([r for r in rows if r['Algorithm'] == algorithm], key=lambda r: r['CapacityGbps'])
        plt.errorbar([r['CapacityGbps'] for r in curve], [r['RuntimeMedianUs'] for r in curve],
                     yerr=[r['RuntimeIQRUs'] / 2 for r in curve], fmt='.-', capsize=3, label=algorithm)
    plt.xlabel('Line capacity (Gb/s)', fontsize=13)
    plt.ylabel('Median merge time (us)', fontsize=13)
    title = 'Merge runtime'
    plt.title(title, fontsize=15)
    plt.legend()
    return [_save(output_folder, title)]


plot_function_dict = {
    'compliance_curves': plot_compliance_curves,
    'distribution_bars': plot_distribution_bars,
    'runtime': plot_runtime,
}

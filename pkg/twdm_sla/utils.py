import os
import csv
import json
from collections import OrderedDict

SCHEMA_VERSION = 1

# Internal time unit is the integer nanosecond.
NS_PER_US = 1000
AU_BYTES = 160


def init_config(config, default_config, name):
    """Initialise non-given config values with defaults"""
    if config is None:
        config = dict(default_config)
    else:
        config = dict(config)
        for k in default_config.keys():
            if k not in config.keys():
                config[k] = default_config[k]
    if config.get('PRINT_CONFIG', False):
        print('\n%s Config:' % name)
        for c in config.keys():
            print('%-20s : %-30s' % (c, config[c]))
    return config


def check_config_keys(config, default_config, name):
    """Raises if the config carries keys the component does not know about."""
    unknown = [k for k in config.keys() if k not in default_config.keys()]
    if len(unknown) > 0:
        raise ConfigError('Unknown %s config field(s): %s' % (name, ', '.join(sorted(unknown))))


def us_to_ns(value_us):
    """Converts a duration given in µs to integer ns."""
    if value_us is None:
        return None
    return int(round(float(value_us) * NS_PER_US))


def au_duration_ns(line_rate_gbps):
    """Duration of one allocation unit (160 bytes) at the given line rate, in ns (51.2 ns at 25 Gb/s)."""
    return AU_BYTES * 8 / float(line_rate_gbps)


def validate_metrics_list(metrics_list):
    """Get names of metric classes and ensure they are unique"""
    names = [m.get_name() for m in metrics_list]
    if len(names) != len(set(names)):
        raise ConfigError('Code being run with multiple metrics of the same name')
    return names


def write_table(rows, out_file, field_order=None):
    """Writes a list of flat dict rows to csv, preceded by a schema version line."""
    if field_order is None:
        field_order = []
    fields = OrderedDict(zip(field_order, [None for _ in field_order]))
    for row in rows:
        for k in row.keys():
            fields[k] = None
    fields = list(fields.keys())

    os.makedirs(os.path.dirname(os.path.abspath(out_file)), exist_ok=True)
    with open(out_file, 'w', newline='') as f:
        f.write('# schema_version=%i\n' % SCHEMA_VERSION)
        writer = csv.writer(f)
        writer.writerow(fields)
        for row in rows:
            writer.writerow([_format_cell(row.get(k, '')) for k in fields])
    return out_file


def _format_cell(value):
    if isinstance(value, (list, tuple)):
        return ' '.join(str(v) for v in value)
    return value


def load_table(file):
    """Loads a csv written by write_table. Numeric cells are converted to float."""
    rows = []
    with open(file) as f:
        first = f.readline()
        if not first.startswith('# schema_version='):
            raise TwdmException('File %s has no schema version header' % os.path.basename(file))
        version = int(first.strip().split('=')[1])
        if version != SCHEMA_VERSION:
            raise TwdmException('File %s has schema version %i, expected %i' % (file, version, SCHEMA_VERSION))
        reader = csv.reader(f)
        keys = next(reader)
        for row in reader:
            if len(row) != len(keys):
                continue
            rows.append({k: _parse_cell(v) for k, v in zip(keys, row)})
    return rows


def _parse_cell(value):
    try:
        return float(value)
    except ValueError:
        return value


def write_json(data, out_file):
    """Writes full run detail as json with a schema version field."""
    os.makedirs(os.path.dirname(os.path.abspath(out_file)), exist_ok=True)
    payload = {'schema_version': SCHEMA_VERSION}
    payload.update(data)
    with open(out_file, 'w') as f:
        json.dump(payload, f, indent=2, sort_keys=False, default=_json_default)
    return out_file


def _json_default(obj):
    # numpy scalars and arrays
    if hasattr(obj, 'tolist'):
        return obj.tolist()
    raise TypeError('Object of type %s is not JSON serializable' % type(obj).__name__)


class TwdmException(Exception):
    """Custom exception for catching expected errors."""
    ...


class ConfigError(TwdmException):
    """Invalid configuration, scenario field or input reference."""
    ...


class FrameOverflowError(ConfigError):
    """Generated load cannot be placed inside the frame."""
    ...


class ScenarioParseError(ConfigError):
    """Scenario or sweep file is not valid JSON."""
    def __init__(self, file, line, column, msg):
        self.file = file
        self.line = line
        self.column = column
        super().__init__('%s:%i:%i: %s' % (file, line, column, msg))


class OracleSizeError(ConfigError):
    """Instance is beyond the exact search bounds."""
    ...


class ConstraintViolation(TwdmException):
    """An assignment breaks one of the scheduling constraints."""
    def __init__(self, constraint, msg):
        self.constraint = constraint
        super().__init__('Constraint (%s) violated: %s' % (constraint, msg))


class InvariantViolation(TwdmException):
    """Internal invariant broken while running."""
    ...

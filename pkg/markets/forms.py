"""
Market configuration files.

A config is a JSON object: either a single market

    {"r": 0.02, "mu": [0.08, 0.05], "sigma": [[0.2, 0], [0.1, 0.3]],
     "labels": ["index", "stock1"]}

or a piecewise-constant schedule

    {"schedule": [{"duration": 5, "market": {...}}, ...]}

Numbers may be given as decimal strings.
"""
import json
import math
from decimal import Decimal, InvalidOperation

from django import forms
from django.core.exceptions import ValidationError

from .exceptions import MarketStructureError
from .market_model import MarketSpec, market_to_dict
from .simulation import MarketSchedule

ERROR_CODES = ('missing_field', 'dimension_mismatch', 'non_finite',
               'rank_deficient', 'invalid')


def _to_float(value):
    if isinstance(value, bool):
        raise ValidationError("Enter a number.", code='invalid')
    try:
        number = float(Decimal(str(value).strip()))
    except (InvalidOperation, ValueError, TypeError):
        raise ValidationError("Enter a number.", code='invalid')
    if not math.isfinite(number):
        raise ValidationError("Numbers must be finite.", code='non_finite')
    return number


class MarketFieldMixin(object):
    """
    Report absent fields with the 'missing_field' code.
    """
    def validate(self, value):
        if self.required and value in self.empty_values:
            raise ValidationError("This field is required.",
                                  code='missing_field')


class NumberField(MarketFieldMixin, forms.Field):
    def to_python(self, value):
        if value in self.empty_values:
            return None
        return _to_float(value)


class VectorField(MarketFieldMixin, forms.Field):
    def to_python(self, value):
        if value in self.empty_values:
            return None
        if not isinstance(value, (list, tuple)):
            raise ValidationError("Enter a list of numbers.", code='invalid')
        return [_to_float(item) for item in value]


class MatrixField(MarketFieldMixin, forms.Field):
    def to_python(self, value):
        if value in self.empty_values:
            return None
        if not isinstance(value, (list, tuple)) or not all(
                isinstance(row, (list, tuple)) for row in value):
            raise ValidationError("Enter a list of rows.", code='invalid')
        return [[_to_float(item) for item in row] for row in value]


class LabelsField(forms.Field):
    def to_python(self, value):
        if value in self.empty_values:
            return None
        if not isinstance(value, (list, tuple)):
            raise ValidationError("Enter a list of names.", code='invalid')
        return [str(item) for item in value]


class MarketSpecForm(forms.Form):
    """
    Validates one market object; `cleaned_data['market']` holds the
    resulting MarketSpec.
    """
    r = NumberField()
    mu = VectorField()
    sigma = MatrixField()
    labels = LabelsField(required=False)

    def clean(self):
        cleaned_data = super(MarketSpecForm, self).clean()
        mu = cleaned_data.get('mu')
        sigma = cleaned_data.get('sigma')
        labels = cleaned_data.get('labels')
        if mu is None or sigma is None or 'r' not in cleaned_data:
            return cleaned_data
        width = len(sigma[0]) if sigma else 0
        if width < 1:
            self.add_error('sigma', ValidationError(
                "sigma needs at least one column.",
                code='dimension_mismatch'))
            return cleaned_data
        for k, row in enumerate(sigma):
            if len(row) != width:
                self.add_error('sigma', ValidationError(
                    "Row %(row)s has %(length)s entries, expected %(width)s.",
                    code='dimension_mismatch',
                    params={'row': k, 'length': len(row), 'width': width}))
                return cleaned_data
        if len(sigma) != len(mu):
            self.add_error('sigma', ValidationError(
                "sigma has %(rows)s rows but mu has %(n)s entries.",
                code='dimension_mismatch',
                params={'rows': len(sigma), 'n': len(mu)}))
            return cleaned_data
        if labels is not None and len(labels) != len(mu):
            self.add_error('labels', ValidationError(
                "%(got)s labels for %(n)s securities.",
                code='dimension_mismatch',
                params={'got': len(labels), 'n': len(mu)}))
            return cleaned_data
        if width > len(mu):
            self.add_error('sigma', ValidationError(
                "Brownian dimension %(width)s exceeds %(n)s securities.",
                code='dimension_mismatch',
                params={'width': width, 'n': len(mu)}))
            return cleaned_data
        try:
            cleaned_data['market'] = MarketSpec(
                r=cleaned_data['r'], mu=mu, sigma=sigma, labels=labels)
        except MarketStructureError as e:
            self.add_error('sigma', ValidationError(str(e),
                                                    code='rank_deficient'))
        return cleaned_data


class ScheduleSegmentForm(forms.Form):
    duration = NumberField()

    def clean_duration(self):
        duration = self.cleaned_data['duration']
        if duration <= 0:
            raise ValidationError("Durations must be positive.",
                                  code='invalid')
        return duration


def _market_from(data, prefix=''):
    if not isinstance(data, dict):
        raise ValidationError({prefix or 'market': ValidationError(
            "Expected a JSON object.", code='invalid')})
    form = MarketSpecForm(data)
    if not form.is_valid():
        raise ValidationError({
            prefix + field: errors
            for field, errors in form.errors.as_data().items()})
    return form.cleaned_data['market']


def parse_market_config(text):
    """
    Parse and validate config text into a MarketSpec or a MarketSchedule.

    Raises ValidationError whose error_dict maps field names (prefixed by
    ``schedule[i].`` inside schedules) to errors with the codes in
    ERROR_CODES.
    """
    try:
        data = json.loads(text)
    except ValueError as e:
        raise ValidationError({'config': ValidationError(
            "Not valid JSON: %(error)s", code='invalid',
            params={'error': e})})
    if not isinstance(data, dict):
        raise ValidationError({'config': ValidationError(
            "Expected a JSON object.", code='invalid')})
    if 'schedule' not in data:
        return _market_from(data)
    entries = data['schedule']
    if not isinstance(entries, list) or not entries:
        raise ValidationError({'schedule': ValidationError(
            "Expected a non-empty list of segments.", code='missing_field')})
    segments = []
    errors = {}
    for i, entry in enumerate(entries):
        prefix = 'schedule[{}].'.format(i)
        if not isinstance(entry, dict):
            errors[prefix + 'segment'] = [ValidationError(
                "Expected a JSON object.", code='invalid')]
            continue
        segment_form = ScheduleSegmentForm(entry)
        if not segment_form.is_valid():
            for field, field_errors in segment_form.errors.as_data().items():
                errors[prefix + field] = field_errors
        if 'market' not in entry:
            errors[prefix + 'market'] = [ValidationError(
                "This field is required.", code='missing_field')]
            continue
        try:
            market = _market_from(entry['market'], prefix)
        except ValidationError as e:
            errors.update(e.error_dict)
            continue
        if segment_form.is_valid():
            segments.append((segment_form.cleaned_data['duration'], market))
    if errors:
        raise ValidationError(errors)
    try:
        return MarketSchedule(tuple(segments))
    except MarketStructureError as e:
        raise ValidationError({'schedule': ValidationError(
            str(e), code='dimension_mismatch')})


def serialize_market_config(market):
    """
    Inverse of parse_market_config.
    """
    if isinstance(market, MarketSchedule):
        data = {'schedule': [{'duration': duration,
                              'market': market_to_dict(spec)}
                             for duration, spec in market.segments]}
    else:
        data = market_to_dict(market)
    return json.dumps(data, indent=2, sort_keys=True)


def error_codes(error):
    """
    Map each field of a ValidationError to the list of its error codes;
    codes outside ERROR_CODES are reported as 'invalid'.
    """
    return {field: [e.code if e.code in ERROR_CODES else 'invalid'
                    for e in errors]
            for field, errors in error.error_dict.items()}

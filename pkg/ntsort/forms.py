from decimal import Decimal

from django import forms

from ntsort.models import BenchmarkRun


class MetricsForm(forms.Form):
    """Query parameters of the metrics endpoint."""

    price = forms.DecimalField(min_value=Decimal("0.01"), max_digits=14, decimal_places=2)
    mib = forms.DecimalField(required=False, min_value=0, max_digits=15, decimal_places=3)
    window = forms.DecimalField(
        required=False,
        min_value=Decimal("0.001"),
        max_digits=12,
        decimal_places=3,
        help_text="Seconds of system time to charge; the penny budget when empty.",
    )


class RunFilterForm(forms.Form):
    mode = forms.ChoiceField(choices=BenchmarkRun.MODE_CHOICES, required=False)
    category = forms.ChoiceField(choices=BenchmarkRun.CATEGORY_CHOICES, required=False)
    valid = forms.NullBooleanField(required=False)

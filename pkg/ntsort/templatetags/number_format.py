from decimal import Decimal

from django import template

from ntsort.benchmetrics import MIB

register = template.Library()


@register.filter
def mib(value):
    """Bytes as MiB with one decimal and thousands separators."""
    try:
        return f"{Decimal(int(value)) / MIB:,.1f}"
    except (ValueError, TypeError):
        return value

from decimal import Decimal

from django.db import models

from ntsort import benchmetrics


def _q(value, places):
    return None if value is None else benchmetrics.quantize(value, places)


class BenchmarkRunQuerySet(models.QuerySet):
    def create_from_result(self, result):
        return self.create(
            product=result.product,
            mode=result.mode.value,
            category=result.category.value,
            budget_seconds=_q(result.budget_seconds, 3),
            elapsed_seconds=_q(result.elapsed_seconds, 6),
            cpu_kernel_seconds=_q(result.cpu_kernel_seconds, 3),
            cpu_user_seconds=_q(result.cpu_user_seconds, 3),
            bytes_sorted=result.bytes_sorted,
            records_sorted=result.records_sorted,
            gb_per_dollar=_q(result.gb_per_dollar, 3),
            valid=result.valid,
            overrun_seconds=_q(result.overrun_seconds, 3),
            failure=result.failure,
        )


class BenchmarkRun(models.Model):
    MODE_CHOICES = [(m.value, m.value) for m in benchmetrics.Mode]
    CATEGORY_CHOICES = [(c.value, c.value) for c in benchmetrics.Category]

    product = models.CharField(max_length=100, default="ntsort")
    mode = models.CharField(max_length=20, choices=MODE_CHOICES)
    category = models.CharField(
        max_length=20, choices=CATEGORY_CHOICES, default=benchmetrics.Category.INDY.value
    )
    budget_seconds = models.DecimalField(max_digits=12, decimal_places=3, null=True, blank=True)
    elapsed_seconds = models.DecimalField(max_digits=15, decimal_places=6)
    cpu_kernel_seconds = models.DecimalField(max_digits=12, decimal_places=3, null=True, blank=True)
    cpu_user_seconds = models.DecimalField(max_digits=12, decimal_places=3, null=True, blank=True)
    bytes_sorted = models.PositiveBigIntegerField(default=0)
    records_sorted = models.PositiveBigIntegerField(default=0)
    gb_per_dollar = models.DecimalField(max_digits=15, decimal_places=3, null=True, blank=True)
    valid = models.BooleanField(default=True)
    overrun_seconds = models.DecimalField(max_digits=12, decimal_places=3, null=True, blank=True)
    failure = models.CharField(max_length=255, blank=True)
    created_at = models.DateTimeField(auto_now_add=True)

    objects = BenchmarkRunQuerySet.as_manager()

    class Meta:
        db_table = "benchmark_runs"
        ordering = ["-created_at", "-id"]

    def __str__(self):
        return f"{self.product} {self.mode} {self.elapsed_seconds} s"

    @property
    def mib_sorted(self):
        return Decimal(self.bytes_sorted) / benchmetrics.MIB

    def to_result(self):
        return benchmetrics.BenchmarkResult(
            mode=benchmetrics.Mode(self.mode),
            category=benchmetrics.Category(self.category),
            product=self.product,
            elapsed_seconds=self.elapsed_seconds,
            bytes_sorted=self.bytes_sorted,
            records_sorted=self.records_sorted,
            cpu_user_seconds=self.cpu_user_seconds,
            cpu_kernel_seconds=self.cpu_kernel_seconds,
            budget_seconds=self.budget_seconds,
            gb_per_dollar=self.gb_per_dollar,
            valid=self.valid,
            overrun_seconds=self.overrun_seconds,
            failure=self.failure,
        )

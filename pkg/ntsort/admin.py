from django.contrib import admin

from ntsort.models import BenchmarkRun


@admin.register(BenchmarkRun)
class BenchmarkRunAdmin(admin.ModelAdmin):
    list_display = ('id', 'product', 'mode', 'category', 'elapsed_seconds', 'budget_seconds',
                    'gb_per_dollar', 'valid', 'created_at')
    list_filter = ('mode', 'category', 'valid')
    search_fields = ('product', 'failure')

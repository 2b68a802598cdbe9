from django.apps import AppConfig


class NtsortConfig(AppConfig):
    name = "ntsort"
    verbose_name = "NTsort benchmarks"

from django.urls import path

from .views import (
    DashboardView,
    RunListAPIView,
    MetricsAPIView,
    ReportCSVView,
    DeleteRunAPIView,
)

urlpatterns = [
    path('', DashboardView.as_view(), name='dashboard'),

    # Benchmark API endpoints
    path('api/runs/', RunListAPIView.as_view(), name='api_runs'),
    path('api/run/<int:run_id>/delete/', DeleteRunAPIView.as_view(), name='api_delete_run'),
    path('api/metrics/', MetricsAPIView.as_view(), name='api_metrics'),
    path('api/report.csv', ReportCSVView.as_view(), name='api_report_csv'),
]

from django.contrib.auth.mixins import LoginRequiredMixin
from django.http import HttpResponse, JsonResponse
from django.utils.decorators import method_decorator
from django.views.decorators.csrf import csrf_exempt
from django.views.generic import TemplateView, View

from ntsort import benchmetrics
from ntsort.exceptions import NtsortError
from ntsort.forms import MetricsForm, RunFilterForm
from ntsort.models import BenchmarkRun


def check_staff_permission(user):
    """Check if user has staff permission for write operations"""
    if not user.is_staff:
        return JsonResponse({
            'success': False,
            'error': 'Permission denied. Only staff users can perform this action.',
        }, status=403)
    return None


def _str(value):
    return None if value is None else str(value)


def filter_runs(params):
    form = RunFilterForm(params)
    runs = BenchmarkRun.objects.all()
    if not form.is_valid():
        return runs, form.errors
    if form.cleaned_data['mode']:
        runs = runs.filter(mode=form.cleaned_data['mode'])
    if form.cleaned_data['category']:
        runs = runs.filter(category=form.cleaned_data['category'])
    if form.cleaned_data['valid'] is not None:
        runs = runs.filter(valid=form.cleaned_data['valid'])
    return runs, None


class DashboardView(LoginRequiredMixin, TemplateView):
    template_name = 'ntsort/dashboard.html'

    def get_context_data(self, **kwargs):
        kwargs['runs'] = BenchmarkRun.objects.all()
        kwargs['reference'] = benchmetrics.reference_results()
        kwargs['history'] = benchmetrics.load_history()
        return super().get_context_data(**kwargs)


class RunListAPIView(LoginRequiredMixin, View):
    """API endpoint to list benchmark runs with filters"""

    def get(self, request):
        runs, errors = filter_runs(request.GET)
        if errors:
            return JsonResponse({'success': False, 'errors': errors}, status=400)

        data = {
            'runs': [
                {
                    'id': r.id,
                    'product': r.product,
                    'mode': r.mode,
                    'category': r.category,
                    'elapsed_seconds': str(r.elapsed_seconds),
                    'budget_seconds': _str(r.budget_seconds),
                    'cpu_kernel_seconds': _str(r.cpu_kernel_seconds),
                    'cpu_user_seconds': _str(r.cpu_user_seconds),
                    'bytes_sorted': r.bytes_sorted,
                    'records_sorted': r.records_sorted,
                    'gb_per_dollar': _str(r.gb_per_dollar),
                    'valid': r.valid,
                    'failure': r.failure,
                    'created_at': r.created_at.isoformat(),
                }
                for r in runs
            ]
        }
        return JsonResponse(data)


class MetricsAPIView(LoginRequiredMixin, View):
    """API endpoint computing the penny budget and GB/$ for a system price"""

    def get(self, request):
        form = MetricsForm(request.GET)
        if not form.is_valid():
            return JsonResponse({'success': False, 'errors': form.errors}, status=400)

        try:
            price = benchmetrics.PriceModel(form.cleaned_data['price'])
            budget = benchmetrics.penny_budget(price)
            data = {
                'success': True,
                'price_usd': str(price.system_price_usd),
                'penny_budget_seconds': str(benchmetrics.quantize(budget, 1)),
            }
            mib = form.cleaned_data['mib']
            if mib is not None:
                window = form.cleaned_data['window'] or budget
                value = benchmetrics.gb_per_dollar(
                    int(mib * benchmetrics.MIB), price, window_seconds=window
                )
                data['window_seconds'] = str(benchmetrics.quantize(window, 1))
                data['gb_per_dollar'] = str(benchmetrics.quantize(value, 2))
            return JsonResponse(data)
        except NtsortError as e:
            return JsonResponse({
                'success': False,
                'error': str(e),
            }, status=400)


class ReportCSVView(LoginRequiredMixin, View):
    """Download stored runs, optionally with the published reference rows, as CSV"""

    def get(self, request):
        runs, errors = filter_runs(request.GET)
        if errors:
            return JsonResponse({'success': False, 'errors': errors}, status=400)
        results = [r.to_result() for r in runs]
        if request.GET.get('reference') in ('1', 'true', 'yes'):
            results = benchmetrics.reference_results() + results
        if not results:
            return JsonResponse({
                'success': False,
                'error': 'No benchmark runs to report',
            }, status=404)

        response = HttpResponse(
            benchmetrics.render_report(results, format='csv'),
            content_type='text/csv',
        )
        response['Content-Disposition'] = 'attachment; filename="ntsort-results.csv"'
        return response


@method_decorator(csrf_exempt, name='dispatch')
class DeleteRunAPIView(LoginRequiredMixin, View):
    """API endpoint to delete a benchmark run"""

    def post(self, request, run_id):
        perm_check = check_staff_permission(request.user)
        if perm_check:
            return perm_check

        try:
            BenchmarkRun.objects.get(id=run_id).delete()
            return JsonResponse({
                'success': True,
            })
        except BenchmarkRun.DoesNotExist:
            return JsonResponse({
                'error': 'Benchmark run not found'
            }, status=404)

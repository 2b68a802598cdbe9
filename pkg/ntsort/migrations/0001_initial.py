# Generated by Django 6.0.1 on 2026-10-18 09:12

from django.db import migrations, models


class Migration(migrations.Migration):

    initial = True

    dependencies = [
    ]

    operations = [
        migrations.CreateModel(
            name='BenchmarkRun',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('product', models.CharField(default='ntsort', max_length=100)),
                ('mode', models.CharField(choices=[('datamation', 'datamation'), ('minutesort', 'minutesort'), ('pennysort', 'pennysort'), ('perf_price', 'perf_price')], max_length=20)),
                ('category', models.CharField(choices=[('Daytona', 'Daytona'), ('Indy', 'Indy')], default='Indy', max_length=20)),
                ('budget_seconds', models.DecimalField(blank=True, decimal_places=3, max_digits=12, null=True)),
                ('elapsed_seconds', models.DecimalField(decimal_places=6, max_digits=15)),
                ('cpu_kernel_seconds', models.DecimalField(blank=True, decimal_places=3, max_digits=12, null=True)),
                ('cpu_user_seconds', models.DecimalField(blank=True, decimal_places=3, max_digits=12, null=True)),
                ('bytes_sorted', models.PositiveBigIntegerField(default=0)),
                ('records_sorted', models.PositiveBigIntegerField(default=0)),
                ('gb_per_dollar', models.DecimalField(blank=True, decimal_places=3, max_digits=15, null=True)),
                ('valid', models.BooleanField(default=True)),
                ('overrun_seconds', models.DecimalField(blank=True, decimal_places=3, max_digits=12, null=True)),
                ('failure', models.CharField(blank=True, max_length=255)),
                ('created_at', models.DateTimeField(auto_now_add=True)),
            ],
            options={
                'db_table': 'benchmark_runs',
                'ordering': ['-created_at', '-id'],
            },
        ),
    ]

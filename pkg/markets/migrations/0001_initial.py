from django.db import migrations, models


class Migration(migrations.Migration):

    initial = True

    dependencies = []

    operations = [
        migrations.CreateModel(
            name='RunRecord',
            fields=[
                ('id', models.AutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('created', models.DateTimeField(auto_now_add=True)),
                ('last_modified', models.DateTimeField(auto_now=True)),
                ('command', models.CharField(choices=[('analyze', 'Analyze'), ('simulate', 'Simulate'), ('verify', 'Verify')], max_length=20)),
                ('config_path', models.CharField(blank=True, max_length=500)),
                ('seed', models.DecimalField(blank=True, decimal_places=0, max_digits=20, null=True)),
                ('manifest', models.TextField(blank=True)),
                ('exit_code', models.PositiveIntegerField(default=0)),
                ('status', models.PositiveIntegerField(choices=[(1, 'Succeeded'), (2, 'Failed')], default=1)),
            ],
            options={
                'ordering': ['-created'],
            },
        ),
    ]

from django.db import models

from model_utils import Choices


class TimeStampedModel(models.Model):
    """
    An abstract model for the common fields 'created' and 'last_modified'.
    """
    created = models.DateTimeField(auto_now_add=True)
    last_modified = models.DateTimeField(auto_now=True)

    class Meta:
        abstract = True


class RunRecord(TimeStampedModel):
    """
    Ledger entry for one run of a management command.
    """
    COMMAND_CHOICES = Choices(('analyze', 'Analyze'),
                              ('simulate', 'Simulate'),
                              ('verify', 'Verify'))
    STATUS_CHOICES = Choices((1, 'succeeded', 'Succeeded'),
                             (2, 'failed', 'Failed'))
    command = models.CharField(max_length=20, choices=COMMAND_CHOICES)
    config_path = models.CharField(max_length=500, blank=True)
    seed = models.DecimalField(max_digits=20, decimal_places=0, null=True,
                               blank=True)
    manifest = models.TextField(blank=True)
    exit_code = models.PositiveIntegerField(default=0)
    status = models.PositiveIntegerField(choices=STATUS_CHOICES,
                                         default=STATUS_CHOICES.succeeded)

    class Meta:
        ordering = ['-created']

    def is_successful(self):
        """
        Returns True if the run finished with exit code 0.
        """
        return self.status == self.STATUS_CHOICES.succeeded

    def __str__(self):
        return "{} {}".format(self.command, self.config_path)

from django.apps import AppConfig


class PsemixConfig(AppConfig):
    name = 'psemix'
    verbose_name = 'PseMix pseudo-bag augmentation'

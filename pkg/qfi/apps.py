from django.apps import AppConfig


class QfiConfig(AppConfig):
    default_auto_field = "django.db.models.BigAutoField"
    name = "qfi"

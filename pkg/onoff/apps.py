from django.apps import AppConfig


class OnoffConfig(AppConfig):
    default_auto_field = "django.db.models.BigAutoField"
    name = "onoff"

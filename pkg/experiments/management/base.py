import json
from pathlib import Path

from django.core.exceptions import ValidationError
from django.core.management.base import BaseCommand, CommandError

from critical_metrology.exceptions import CriticalMetrologyError
from critical_metrology.utils import atomic_write_text, canonical_json

CONFIG_EXIT = 2
IO_EXIT = 4
CHECK_EXIT = 5


class MetrologyCommand(BaseCommand):
    """
    Base for the experiment commands.

    Errors escaping ``handle`` leave with a status that tells their kind:
    2 for configuration, 3 for numeric failures, 4 for I/O and 5 for failed
    checks.
    """

    def add_config_argument(self, parser):
        parser.add_argument('--config', help='JSON document with the command settings; flags override it')

    def execute(self, *args, **options):
        try:
            return super().execute(*args, **options)
        except ValidationError as exc:
            raise CommandError("; ".join(exc.messages), returncode=CONFIG_EXIT) from exc
        except CriticalMetrologyError as exc:
            raise CommandError(str(exc), returncode=exc.exit_code) from exc
        except OSError as exc:
            raise CommandError(str(exc), returncode=IO_EXIT) from exc

    def load_config(self, options, names):
        """Merge the --config document with the flags that were given."""
        data = {}
        if options.get('config'):
            try:
                document = json.loads(Path(options['config']).read_text(encoding="utf-8"))
            except json.JSONDecodeError as exc:
                raise CommandError(f"invalid JSON in {options['config']}: {exc}", returncode=CONFIG_EXIT) from exc
            if not isinstance(document, dict):
                raise CommandError("the config document must be a JSON object", returncode=CONFIG_EXIT)
            data.update(document)
        for name in names:
            if options.get(name) not in (None, False):
                data[name] = options[name]
        return data

    def validated(self, form_class, data):
        form = form_class(data)
        if not form.is_valid():
            messages = [str(message) for errors in form.errors.values() for message in errors]
            raise CommandError("; ".join(messages), returncode=CONFIG_EXIT)
        return form.cleaned_data

    def emit_json(self, payload, path=None):
        text = canonical_json(payload) + "\n"
        if path:
            atomic_write_text(path, text)
        else:
            self.stdout.write(text, ending="")

from dataclasses import asdict

import numpy as np
from django import forms

from critical_metrology.exceptions import DomainError, ScheduleError
from dynamics.state import IntegratorConfig
from onoff.optimizer import solve_fixed_n
from schedules.laws import Constant, PhaseFeedbackOnOff, from_onoff_feedback, from_onoff_solution, schedule_from_dict

from .models import SweepRun
from .sweeps import SweepSpec

SYMMETRIC_PHASE = "the symmetric phase requires 0 <= eps <= omega"


class ScheduleForm(forms.Form):
    """Form describing the control law of a single run"""

    KIND_CHOICES = [
        ('quench', 'Sudden quench to eps_on'),
        ('onoff', 'Optimal on-off protocol with n cycles'),
        ('onoff_feedback', 'Phase-feedback on-off law'),
        ('literal', 'Schedule JSON literal'),
    ]

    schedule = forms.ChoiceField(choices=KIND_CHOICES)
    wT = forms.FloatField(min_value=0.0, help_text="Total time in units of 1/omega")
    n = forms.IntegerField(required=False, min_value=0)
    eps_on = forms.FloatField(required=False)
    eps_max = forms.FloatField(required=False)
    phi_on = forms.FloatField(required=False)
    cycle_cap = forms.IntegerField(required=False, min_value=0)
    literal = forms.JSONField(required=False)
    feedback = forms.BooleanField(required=False)

    def clean(self):
        cleaned_data = super().clean()
        wT = cleaned_data.get('wT')
        if wT is None:
            return cleaned_data
        if wT <= 0.0:
            raise forms.ValidationError("wT must be positive.")

        for name in ('eps_on', 'eps_max'):
            value = cleaned_data.get(name)
            if value is not None and not 0.0 <= value <= 1.0:
                raise forms.ValidationError(f"{name}={value!r} is not allowed: {SYMMETRIC_PHASE}.")

        try:
            cleaned_data['schedule_obj'] = self._build(cleaned_data, wT)
            cleaned_data['schedule_obj'].validate(1.0)
        except (ScheduleError, DomainError) as exc:
            raise forms.ValidationError(str(exc)) from exc
        return cleaned_data

    def _build(self, data, wT):
        kind = data['schedule']
        eps_max = data.get('eps_max')
        if kind == 'quench':
            eps_on = data.get('eps_on')
            return Constant(1.0 if eps_on is None else eps_on, eps_max=eps_max)
        if kind == 'onoff':
            if data.get('n') is None:
                raise forms.ValidationError("The on-off protocol needs the number of cycles n.")
            solution = solve_fixed_n(wT, data['n'], 1.0 if eps_max is None else eps_max)
            if not solution.feasible:
                raise forms.ValidationError(f"No on-off protocol with n={data['n']} fits in wT={wT!r}.")
            if data.get('feedback'):
                return from_onoff_feedback(solution)
            return from_onoff_solution(solution)
        if kind == 'onoff_feedback':
            if data.get('phi_on') is None:
                raise forms.ValidationError("The feedback law needs phi_on.")
            eps_on = data.get('eps_on')
            return PhaseFeedbackOnOff(
                data['phi_on'],
                1.0 if eps_on is None else eps_on,
                cycle_cap=data.get('cycle_cap'),
                eps_max=eps_max,
            )
        literal = data.get('literal')
        if literal is None:
            raise forms.ValidationError("A literal schedule needs the 'literal' JSON object.")
        return schedule_from_dict(literal)


class IntegratorForm(forms.Form):
    """Integrator tolerances; missing values fall back to the CRITMET_* settings"""

    rel_tol = forms.FloatField(required=False)
    abs_tol = forms.FloatField(required=False)
    max_step = forms.FloatField(required=False)
    output_stride = forms.FloatField(required=False)
    phase_step_cap = forms.FloatField(required=False)

    def clean(self):
        cleaned_data = super().clean()
        overrides = {name: cleaned_data.get(name) for name in self.fields}
        try:
            cleaned_data['config'] = IntegratorConfig.from_settings(**overrides)
        except DomainError as exc:
            raise forms.ValidationError(str(exc)) from exc
        return cleaned_data


class SweepSpecForm(forms.Form):
    """Sweep specification: mode, time grid and the other grid axes"""

    mode = forms.ChoiceField(choices=SweepRun.Mode.choices)
    T = forms.JSONField(required=False, help_text="Explicit list of omega*T values")
    T_range = forms.JSONField(required=False, help_text="[start, stop, count]")
    log = forms.BooleanField(required=False, help_text="Log-space the T_range grid")
    n = forms.JSONField(required=False)
    eps_max = forms.FloatField(required=False)
    gamma = forms.JSONField(required=False)
    nbar = forms.FloatField(required=False, min_value=0.0)
    samples = forms.IntegerField(required=False, min_value=1)
    seed = forms.IntegerField(required=False, min_value=0)
    integrator = forms.JSONField(required=False)

    def clean(self):
        cleaned_data = super().clean()
        mode = cleaned_data.get('mode')
        if mode is None:
            return cleaned_data

        grid = self._time_grid(cleaned_data)
        eps_max = cleaned_data.get('eps_max')
        eps_max = 1.0 if eps_max is None else eps_max
        if not 0.0 < eps_max <= 1.0:
            raise forms.ValidationError(f"eps_max={eps_max!r} is not allowed: {SYMMETRIC_PHASE}.")

        windings = self._list(cleaned_data, 'n', [0], int)
        if any(n < 0 for n in windings):
            raise forms.ValidationError("Winding numbers must be non-negative.")
        rates = self._list(cleaned_data, 'gamma', [0.0], float)
        if any(g < 0.0 for g in rates):
            raise forms.ValidationError("Thermalization rates must be non-negative.")

        integrator = IntegratorForm(cleaned_data.get('integrator') or {})
        if not integrator.is_valid():
            raise forms.ValidationError(integrator.errors.as_text())

        cleaned_data['spec'] = SweepSpec(
            mode=mode,
            T=tuple(grid),
            n=tuple(sorted(set(windings))),
            eps_max=eps_max,
            gamma=tuple(sorted(set(rates))),
            nbar=cleaned_data.get('nbar') or 0.0,
            samples=cleaned_data.get('samples') or 1,
            seed=cleaned_data.get('seed') or 0,
            integrator=asdict(integrator.cleaned_data['config']),
        )
        return cleaned_data

    def _time_grid(self, data):
        explicit, span = data.get('T'), data.get('T_range')
        if explicit is not None and span is not None:
            raise forms.ValidationError("Give either T or T_range, not both.")
        if span is not None:
            try:
                start, stop, count = float(span[0]), float(span[1]), int(span[2])
            except (TypeError, ValueError, IndexError, KeyError) as exc:
                raise forms.ValidationError("T_range must be [start, stop, count].") from exc
            if start <= 0.0 or count < 1:
                raise forms.ValidationError("T_range needs a positive start and at least one point.")
            spacing = np.geomspace if data.get('log') else np.linspace
            grid = [float(t) for t in spacing(start, stop, count)]
        elif explicit is not None:
            try:
                grid = [float(t) for t in explicit]
            except (TypeError, ValueError) as exc:
                raise forms.ValidationError("T must be a list of numbers.") from exc
        else:
            raise forms.ValidationError("The time grid is empty: give T or T_range.")

        if not grid:
            raise forms.ValidationError("The time grid is empty.")
        if any(t <= 0.0 for t in grid):
            raise forms.ValidationError("T values must be positive.")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise forms.ValidationError("T values must be strictly increasing.")
        return grid

    @staticmethod
    def _list(data, name, default, kind):
        values = data.get(name)
        if values is None:
            return default
        if not isinstance(values, list):
            values = [values]
        try:
            return [kind(v) for v in values]
        except (TypeError, ValueError) as exc:
            raise forms.ValidationError(f"{name} must be a list of numbers.") from exc

from rest_framework import serializers

from core.exceptions import LabError
from lagrangians.evaluators import builtin_model
from lagrangians.models import MODEL_REGISTRY


class ModelSpecSerializer(serializers.Serializer):
    """{"model": "scalar_field_2d", "m2": 1.0, "lambda": 0.0}; unknown keys are model parameters."""
    model = serializers.ChoiceField(choices=sorted(MODEL_REGISTRY))

    def to_internal_value(self, data):
        validated = super().to_internal_value(data)
        params = {}
        for key, value in data.items():
            if key == 'model':
                continue
            try:
                params[key] = float(value)
            except (TypeError, ValueError):
                raise serializers.ValidationError({key: "Model parameters must be numbers"})
        validated['params'] = params
        return validated

    def create(self, validated_data):
        try:
            return builtin_model(validated_data['model'], validated_data['params'])
        except LabError as e:
            raise serializers.ValidationError({'model': str(e)})

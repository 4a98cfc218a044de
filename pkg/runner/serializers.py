from rest_framework import serializers

from lagrangians.serializers import ModelSpecSerializer
from runner.checks import OPERATIONS, SWEEPS
from runner.models import Scenario


class GridSerializer(serializers.Serializer):
    K = serializers.IntegerField(min_value=8)
    levels = serializers.IntegerField(min_value=1, max_value=6, default=1)
    T = serializers.FloatField(min_value=0.0, default=0.3)

    def validate_T(self, value):
        if value <= 0:
            raise serializers.ValidationError("Slab height must be positive")
        return value

    def validate(self, attrs):
        K = attrs['K']
        if attrs['levels'] > 1 and (K < 16 or K & (K - 1)):
            raise serializers.ValidationError({'K': "Refinement sweeps need K a power of two >= 16"})
        return attrs


class ScenarioSerializer(serializers.Serializer):
    """One JSON scenario file.

    {"name": "...", "operation": "hj-scalar-field",
     "model": {"model": "scalar_field_2d", "m2": 1.0},
     "grid": {"K": 32, "levels": 3, "T": 0.3}, "seed": 7, ...}
    """
    name = serializers.CharField(max_length=100)
    operation = serializers.ChoiceField(choices=sorted(set(OPERATIONS) | set(SWEEPS)))
    model = serializers.DictField()
    grid = GridSerializer()
    seed = serializers.IntegerField(min_value=0, max_value=2 ** 64 - 1, default=0)
    samples = serializers.IntegerField(min_value=1, max_value=1000, default=10)
    h = serializers.ListField(child=serializers.FloatField(min_value=0.0), required=False, default=list)
    tolerances = serializers.DictField(child=serializers.FloatField(min_value=0.0), required=False, default=dict)
    options = serializers.DictField(required=False, default=dict)
    parallel = serializers.BooleanField(default=False)

    def validate_model(self, value):
        spec = ModelSpecSerializer(data=value)
        if not spec.is_valid():
            raise serializers.ValidationError(spec.errors)
        # builds and self-tests the model, so a bad parameter set fails here
        spec.save()
        return spec.validated_data

    def create(self, validated_data):
        grid = validated_data['grid']
        model = validated_data['model']
        return Scenario(
            name=validated_data['name'],
            operation=validated_data['operation'],
            model=model['model'],
            params=model['params'],
            K=grid['K'],
            levels=grid['levels'],
            T=grid['T'],
            seed=validated_data['seed'],
            samples=validated_data['samples'],
            h=tuple(validated_data['h']),
            tolerances=dict(validated_data['tolerances']),
            options=dict(validated_data['options']),
            parallel=validated_data['parallel'],
        )


class RunReportSerializer(serializers.Serializer):
    def to_representation(self, report):
        return report.as_dict()

from rest_framework import serializers

from core.exceptions import LabError
from geometry.models import Curve, SGrid, SurfacePatch



class CurveSerializer(serializers.Serializer):
    """JSON codec {"K": ..., "x": [[...]], "z": [[...]], "lift": [...]} for curves."""
    K = serializers.IntegerField(min_value=1)
    x = serializers.ListField(child=serializers.ListField(child=serializers.FloatField()), allow_empty=False)
    z = serializers.ListField(child=serializers.ListField(child=serializers.FloatField()), allow_empty=False)
    lift = serializers.ListField(child=serializers.FloatField(), required=False)
    coarse = serializers.BooleanField(required=False, default=False)

    def validate(self, attrs):
        K = attrs['K']
        for key in ('x', 'z'):
            for row in attrs[key]:
                if len(row) != K:
                    raise serializers.ValidationError({key: f"Every row must have K={K} samples"})
        if 'lift' in attrs and len(attrs['lift']) != len(attrs['x']):
            raise serializers.ValidationError({'lift': "Lift needs one entry per x component"})
        return attrs

    def create(self, validated_data):
        try:
            grid = SGrid(validated_data['K'], coarse=validated_data.get('coarse', False))
            return Curve(grid, validated_data['x'], validated_data['z'], validated_data.get('lift'))
        except LabError as e:
            raise serializers.ValidationError(str(e))

    def to_representation(self, curve):
        return {
            'K': curve.K,
            'x': curve.x.tolist(),
            'z': curve.z.tolist(),
            'lift': curve.lift.tolist(),
        }


class SurfacePatchSerializer(serializers.Serializer):
    """Patches keep row-major K x L sample arrays per component."""
    K = serializers.IntegerField(min_value=1)
    t = serializers.ListField(child=serializers.FloatField(), min_length=2)
    x = serializers.ListField(child=serializers.ListField(child=serializers.ListField(child=serializers.FloatField())))
    z = serializers.ListField(child=serializers.ListField(child=serializers.ListField(child=serializers.FloatField())))
    lift = serializers.ListField(child=serializers.FloatField(), required=False)

    def create(self, validated_data):
        try:
            return SurfacePatch(SGrid(validated_data['K']), validated_data['t'], validated_data['x'],
                                validated_data['z'], validated_data.get('lift'))
        except LabError as e:
            raise serializers.ValidationError(str(e))

    def to_representation(self, patch):
        return {
            'K': patch.sgrid.K,
            'L': patch.L,
            't': patch.t.tolist(),
            'x': patch.x.tolist(),
            'z': patch.z.tolist(),
            'lift': patch.lift.tolist(),
        }


def curve_to_json(curve):
    return CurveSerializer(curve).data


def curve_from_json(data):
    serializer = CurveSerializer(data=data)
    serializer.is_valid(raise_exception=True)
    return serializer.save()

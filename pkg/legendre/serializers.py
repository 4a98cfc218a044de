from rest_framework import serializers

from core.exceptions import LabError
from geometry.serializers import CurveSerializer
from legendre.models import IntegralElement


class IntegralElementSerializer(serializers.Serializer):
    """{"curve": {...}, "p": [[...]], "H": [[...]]}."""
    curve = CurveSerializer()
    p = serializers.ListField(child=serializers.ListField(child=serializers.FloatField()))
    H = serializers.ListField(child=serializers.ListField(child=serializers.FloatField()))

    def create(self, validated_data):
        curve = CurveSerializer().create(validated_data['curve'])
        try:
            return IntegralElement(curve, validated_data['p'], validated_data['H'])
        except LabError as e:
            raise serializers.ValidationError(str(e))

    def to_representation(self, ie):
        return {
            'curve': CurveSerializer(ie.curve).data,
            'p': ie.p.tolist(),
            'H': ie.H.tolist(),
        }

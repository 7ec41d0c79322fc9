import logging

from wtpc.estimation import mse
from wtpc.models.core import ModelSpec, training_data, model_type


def fit(spec, data):
    """
    Least-squares fit of the constrained model spec on data. The returned
    model's train_mse is the MSE over all records of data.
    """

    if not isinstance(spec, ModelSpec):
        spec = ModelSpec(*spec)

    data.require_nonempty("training data")
    w, p = training_data(data, spec)
    model = model_type(spec.model_class).fit(spec, w, p)
    model = model.with_train_mse(mse(model, data))

    logging.info(f"fitted {spec.label} on {len(data)} records, train MSE {model.train_mse}")

    return model

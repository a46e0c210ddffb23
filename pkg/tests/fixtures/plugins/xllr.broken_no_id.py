"""Broken runtime plugin fixture: all five symbols but no runtime_id."""


def load_runtime(err):
    pass


def free_runtime(err):
    pass


def load_entity(module_path, function_path, params, rets, err):
    return None


def make_callable(token, params, rets, err):
    return None


def free_xcall(xcall, err):
    pass

from .evaluate import PRF, EvalReport, evaluate, evaluate_corpus, interior_angles, room_iou

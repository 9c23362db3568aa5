from pathlib import Path

from django.core.management.base import BaseCommand, CommandError

from core.exceptions import InvalidConfig, ParseError, TrainingAborted
from instances.manifest import load_instance_set
from policy.storage import save_policy
from training.config import TrainConfig
from training.forms import TrainForm
from training.models import TrainingRun
from training.recording import record_run
from training.reinforce import train_reinforce


class Command(BaseCommand):
    help = 'Trains a branching policy with REINFORCE under one of the three environment regimes'

    def add_arguments(self, parser):
        parser.add_argument('--regime', required=True, help='mdp, tmdp-dfs or tmdp-objlim')
        parser.add_argument('--train-dir', required=True)
        parser.add_argument('--valid-dir')
        parser.add_argument('--epochs', type=int, default=300)
        parser.add_argument('--time-limit', type=float, help='wall-clock budget in seconds')
        parser.add_argument('--entropy', type=float, help='entropy bonus')
        parser.add_argument('--lr', type=float, help='learning rate')
        parser.add_argument('--sample-rate', type=float, help='fraction of each episode used as samples')
        parser.add_argument('--instances-per-epoch', type=int)
        parser.add_argument('--seed', type=int, default=0)
        parser.add_argument('--out', required=True, help='policy file to write (.npz)')
        parser.add_argument('--log', help='training log CSV')
        parser.add_argument('--eval-interval', type=int, default=10)
        parser.add_argument('--eval-seeds', type=int)
        parser.add_argument('--baseline', action='store_true', help='subtract the batch mean return')
        parser.add_argument('--episode-node-limit', type=int)
        parser.add_argument('--workers', type=int)

    def handle(self, *args, **options):
        opts = TrainForm(options).cleaned_or_error()
        cfg = TrainConfig(
            regime=opts['regime'],
            epochs=opts['epochs'],
            time_limit=opts['time_limit'],
            entropy_bonus=opts['entropy'],
            learning_rate=opts['lr'],
            sample_rate=opts['sample_rate'],
            instances_per_epoch=opts['instances_per_epoch'],
            seed=opts['seed'],
            eval_interval=opts['eval_interval'],
            eval_seeds=opts['eval_seeds'],
            baseline=opts['baseline'],
            episode_node_limit=opts['episode_node_limit'],
            workers=opts['workers'],
        )
        try:
            train_set = load_instance_set(opts['train_dir'])
            valid_set = load_instance_set(opts['valid_dir']) if opts['valid_dir'] else None
            cfg.validate(train_set)
        except (InvalidConfig, ParseError) as exc:
            raise CommandError(str(exc)) from exc

        run = TrainingRun.objects.create(
            kind=TrainingRun.Kind.REINFORCE,
            regime=cfg.regime,
            train_dir=opts['train_dir'],
            valid_dir=opts['valid_dir'] or '',
            seed=cfg.seed,
            config={
                'epochs': cfg.epochs, 'time_limit': cfg.time_limit, 'entropy_bonus': cfg.entropy_bonus,
                'learning_rate': cfg.learning_rate, 'sample_rate': cfg.sample_rate,
                'instances_per_epoch': cfg.instances_per_epoch, 'eval_interval': cfg.eval_interval,
                'eval_seeds': cfg.eval_seeds, 'baseline': cfg.baseline,
                'episode_node_limit': cfg.episode_node_limit,
            },
            policy_path=str(Path(opts['out']).resolve()),
            log_path=str(Path(opts['log']).resolve()) if opts['log'] else '',
        )
        self.stdout.write(
            f"Training {cfg.regime.label} on {len(train_set)} instances for up to {cfg.epochs} epochs..."
        )
        try:
            params, log = train_reinforce(train_set, cfg, valid_set)
        except TrainingAborted as exc:
            run.status = TrainingRun.Status.ABORTED
            run.save(update_fields=['status'])
            raise CommandError(f"Training aborted: {exc}") from exc

        save_policy(params, opts['out'])
        if opts['log']:
            log.write_csv(opts['log'])
        record_run(run, log)

        if log.best_validation is not None:
            self.stdout.write(
                f"Validation geometric mean: {log.initial_validation:.1f} initially, "
                f"{log.best_validation:.1f} best (epoch {log.best_epoch})"
            )
        self.stdout.write(self.style.SUCCESS(f"Saved policy to {opts['out']}"))

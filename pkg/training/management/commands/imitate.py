from pathlib import Path

from django.core.management.base import BaseCommand, CommandError

from core.exceptions import InvalidConfig, ParseError
from instances.manifest import load_instance_set
from policy.storage import save_policy
from training.config import ImitationConfig
from training.forms import ImitateForm
from training.imitation import train_imitation
from training.models import TrainingRun
from training.recording import record_run


class Command(BaseCommand):
    help = 'Fits a branching policy to strong-branching decisions'

    def add_arguments(self, parser):
        parser.add_argument('--train-dir', required=True)
        parser.add_argument('--node-cap', type=int, default=200, help='decisions collected per instance')
        parser.add_argument('--epochs', type=int, default=20)
        parser.add_argument('--lr', type=float, default=1e-2)
        parser.add_argument('--batch-size', type=int, default=32)
        parser.add_argument('--seed', type=int, default=0)
        parser.add_argument('--out', required=True, help='policy file to write (.npz)')
        parser.add_argument('--log', help='training log CSV')

    def handle(self, *args, **options):
        opts = ImitateForm(options).cleaned_or_error()
        cfg = ImitationConfig(
            node_cap_per_instance=opts['node_cap'],
            epochs=opts['epochs'],
            learning_rate=opts['lr'],
            batch_size=opts['batch_size'],
            seed=opts['seed'],
        )
        try:
            train_set = load_instance_set(opts['train_dir'])
            cfg.validate()
        except (InvalidConfig, ParseError) as exc:
            raise CommandError(str(exc)) from exc

        run = TrainingRun.objects.create(
            kind=TrainingRun.Kind.IMITATION,
            train_dir=opts['train_dir'],
            seed=cfg.seed,
            config={
                'node_cap_per_instance': cfg.node_cap_per_instance, 'epochs': cfg.epochs,
                'learning_rate': cfg.learning_rate, 'batch_size': cfg.batch_size,
            },
            policy_path=str(Path(opts['out']).resolve()),
            log_path=str(Path(opts['log']).resolve()) if opts['log'] else '',
        )
        self.stdout.write(f"Collecting strong-branching decisions from {len(train_set)} instances...")
        params, log = train_imitation(train_set, cfg)
        save_policy(params, opts['out'])
        if opts['log']:
            log.write_csv(opts['log'])
        record_run(run, log)

        if log.records:
            last = log.records[-1]
            self.stdout.write(f"Final loss {last.loss:.4f}, training accuracy {100 * last.accuracy:.1f}%")
        self.stdout.write(self.style.SUCCESS(f"Saved policy to {opts['out']}"))
